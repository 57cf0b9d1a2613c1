"""Minimal reader/writer for the pipeline's volume files (.hvol + .raw).

The header is a small text document; the payload is little-endian float32
in row-major order.  Only the keys this component needs are interpreted.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

MAGIC = "hiersr-volume 1"


def read_hvol(header_path: str | Path) -> np.ndarray:
    header_path = Path(header_path)
    lines = [ln for ln in header_path.read_text().splitlines() if ln.strip()]
    if not lines or lines[0].strip() != MAGIC:
        raise ValueError(f"{header_path}: not a volume header")
    fields = {}
    for ln in lines[1:]:
        key, _, value = ln.partition(":")
        fields[key.strip()] = value.strip()
    if fields.get("dtype") != "f32":
        raise ValueError(f"{header_path}: unsupported dtype {fields.get('dtype')!r}")
    dims = tuple(int(x) for x in fields["dims"].split())
    raw = header_path.parent / fields["data"]
    payload = raw.read_bytes()
    if len(payload) != 4 * int(np.prod(dims)):
        raise ValueError(f"{raw}: payload length does not match dims {dims}")
    return np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float32)


def write_hvol(data: np.ndarray, header_path: str | Path) -> None:
    header_path = Path(header_path)
    raw_path = header_path.with_suffix(".raw")
    header = "\n".join([
        MAGIC,
        "dims: " + " ".join(str(n) for n in data.shape),
        "dtype: f32",
        "layout: row-major last-axis-fastest",
        f"data: {raw_path.name}",
    ]) + "\n"
    header_path.write_text(header)
    raw_path.write_bytes(np.ascontiguousarray(data, dtype="<f4").tobytes())
