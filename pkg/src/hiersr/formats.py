"""Bit-exact file formats: volumes as text header + raw payload, trees as
one self-validating binary file.

Volume format (``.hvol`` header next to a ``.raw`` payload):

    hiersr-volume 1
    dims: 64 64 64
    dtype: f32
    layout: row-major last-axis-fastest
    data: <payload file name>
    value_range: <lo> <hi>            (optional)
    normalization: linear|log_then_linear   (optional, with value_range)

The payload is little-endian float32 in row-major order.

Tree format (``.sroc``): magic ``SROC``, u16 version (=1), u8 ndim, ndim
u64 full dims, the build config (f64 epsilon, u32 min_chunk, u32 min
level, u32 max level, u8 downscaler), then nodes in pre-order with
explicit regions: u8 flags (bit 0 = leaf), ndim u64 origin, ndim u64
extent, u32 level, and for leaves the block payload as little-endian
float32.  All integers little-endian.  Reading re-checks every tree
invariant, so a corrupt file cannot round-trip silently.
"""
from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    CorruptHeader,
    HeaderPayloadMismatch,
    InvariantViolation,
    UnsupportedElementType,
    VersionUnsupported,
)
from .octree import BuildConfig, SRNode, SROctree, validate_tree
from .resample import Downscaler
from .volume import Region, ValueRange, Volume, create_volume

VOLUME_MAGIC = "hiersr-volume"
VOLUME_VERSION = 1
TREE_MAGIC = b"SROC"
TREE_VERSION = 1

_DOWNSCALER_CODES = {Downscaler.MEAN_POOL: 0, Downscaler.SUBSAMPLE: 1}
_DOWNSCALER_FROM_CODE = {v: k for k, v in _DOWNSCALER_CODES.items()}


# --- volumes ----------------------------------------------------------------

def write_volume(v: Volume, header_path: str | Path) -> None:
    header_path = Path(header_path)
    raw_path = header_path.with_suffix(".raw")
    lines = [
        f"{VOLUME_MAGIC} {VOLUME_VERSION}",
        "dims: " + " ".join(str(n) for n in v.dims),
        "dtype: f32",
        "layout: row-major last-axis-fastest",
        f"data: {raw_path.name}",
    ]
    if v.meta is not None:
        lines.append(f"value_range: {float(v.meta.lo)!r} {float(v.meta.hi)!r}")
        lines.append(
            "normalization: " + ("log_then_linear" if v.meta.log10 else "linear")
        )
    header_path.write_text("\n".join(lines) + "\n")
    raw_path.write_bytes(np.ascontiguousarray(v.data, dtype="<f4").tobytes())


def read_volume(header_path: str | Path) -> Volume:
    header_path = Path(header_path)
    try:
        text = header_path.read_text()
    except UnicodeDecodeError as e:
        raise CorruptHeader(f"{header_path}: not a text header ({e})") from None
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise CorruptHeader(f"{header_path}: empty header")
    magic = lines[0].split()
    if len(magic) != 2 or magic[0] != VOLUME_MAGIC:
        raise CorruptHeader(f"{header_path}: bad first line {lines[0]!r}")
    if magic[1] != str(VOLUME_VERSION):
        raise VersionUnsupported(f"{header_path}: version {magic[1]} unsupported")
    fields: dict[str, str] = {}
    for ln in lines[1:]:
        key, sep, value = ln.partition(":")
        if not sep:
            raise CorruptHeader(f"{header_path}: malformed line {ln!r}")
        if key.strip() in fields:
            raise CorruptHeader(f"{header_path}: duplicate key {key.strip()!r}")
        fields[key.strip()] = value.strip()
    known = {"dims", "dtype", "layout", "data", "value_range", "normalization"}
    unknown = set(fields) - known
    if unknown:
        raise CorruptHeader(f"{header_path}: unknown keys {sorted(unknown)}")
    for required in ("dims", "dtype", "layout", "data"):
        if required not in fields:
            raise CorruptHeader(f"{header_path}: missing key {required!r}")
    if fields["dtype"] != "f32":
        raise UnsupportedElementType(
            f"{header_path}: element type {fields['dtype']!r} unsupported"
        )
    if fields["layout"] != "row-major last-axis-fastest":
        raise CorruptHeader(f"{header_path}: unknown layout {fields['layout']!r}")
    try:
        dims = tuple(int(x) for x in fields["dims"].split())
    except ValueError:
        raise CorruptHeader(f"{header_path}: bad dims {fields['dims']!r}") from None
    if len(dims) not in (2, 3) or any(n < 1 for n in dims):
        raise CorruptHeader(f"{header_path}: bad dims {dims}")
    meta = None
    if "value_range" in fields:
        try:
            lo, hi = (float(x) for x in fields["value_range"].split())
        except ValueError:
            raise CorruptHeader(
                f"{header_path}: bad value_range {fields['value_range']!r}"
            ) from None
        log10 = fields.get("normalization", "linear") == "log_then_linear"
        meta = ValueRange(lo, hi, log10)
    raw_path = header_path.parent / fields["data"]
    payload = raw_path.read_bytes()
    expected = 4 * int(np.prod(dims))
    if len(payload) != expected:
        raise HeaderPayloadMismatch(
            f"{raw_path}: payload is {len(payload)} bytes, header implies {expected}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(dims)
    return create_volume(dims, data, meta)


# --- trees ------------------------------------------------------------------

def _encode_node(out: io.BytesIO, node: SRNode, ndim: int) -> None:
    flags = 1 if node.is_leaf else 0
    out.write(struct.pack("<B", flags))
    out.write(struct.pack(f"<{ndim}Q", *node.region.origin))
    out.write(struct.pack(f"<{ndim}Q", *node.region.extent))
    out.write(struct.pack("<I", node.level))
    if node.is_leaf:
        out.write(np.ascontiguousarray(node.data.data, dtype="<f4").tobytes())
    else:
        for child in node.children:
            _encode_node(out, child, ndim)


def encode_tree(t: SROctree) -> bytes:
    out = io.BytesIO()
    ndim = t.ndim
    out.write(TREE_MAGIC)
    out.write(struct.pack("<HB", TREE_VERSION, ndim))
    out.write(struct.pack(f"<{ndim}Q", *t.full_dims))
    cfg = t.config
    out.write(struct.pack(
        "<dIIIB", float(cfg.epsilon), cfg.min_chunk, cfg.min_level,
        cfg.max_level, _DOWNSCALER_CODES[cfg.downscaler],
    ))
    _encode_node(out, t.root, ndim)
    return out.getvalue()


class _Cursor:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise InvariantViolation(
                f"file-complete: truncated at byte {self.pos}, wanted {n} more"
            )
        chunk = self.buf[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    @property
    def exhausted(self) -> bool:
        return self.pos == len(self.buf)


def _decode_node(cur: _Cursor, ndim: int) -> SRNode:
    (flags,) = cur.unpack("<B")
    if flags not in (0, 1):
        raise InvariantViolation(f"node-flags: unknown flags byte {flags}")
    origin = cur.unpack(f"<{ndim}Q")
    extent = cur.unpack(f"<{ndim}Q")
    (level,) = cur.unpack("<I")
    if any(e < 1 for e in extent):
        raise InvariantViolation(f"region-bounds: extent {extent} has empty axis")
    region = Region(origin, extent)
    if flags == 1:
        scale = 1 << level
        if any(e % scale for e in extent):
            raise InvariantViolation(
                f"level-divisibility: extent {extent} not divisible by 2^{level}"
            )
        shape = tuple(e // scale for e in extent)
        count = int(np.prod(shape))
        payload = cur.take(4 * count)
        data = np.frombuffer(payload, dtype="<f4").reshape(shape)
        if not np.all(np.isfinite(data)):
            raise InvariantViolation("data-finite: leaf payload contains NaN or Inf")
        return SRNode(region, level, data=Volume(data.astype(np.float32).reshape(shape)))
    children = tuple(_decode_node(cur, ndim) for _ in range(1 << ndim))
    return SRNode(region, level, children=children)


def decode_tree(buf: bytes) -> SROctree:
    cur = _Cursor(buf)
    if cur.take(4) != TREE_MAGIC:
        raise BadMagic("not an SR-octree file (magic mismatch)")
    version, ndim = cur.unpack("<HB")
    if version != TREE_VERSION:
        raise VersionUnsupported(f"tree format version {version} unsupported")
    if ndim not in (2, 3):
        raise InvariantViolation(f"ndim: expected 2 or 3, got {ndim}")
    full_dims = cur.unpack(f"<{ndim}Q")
    epsilon, min_chunk, min_level, max_level, ds_code = cur.unpack("<dIIIB")
    if ds_code not in _DOWNSCALER_FROM_CODE:
        raise InvariantViolation(f"downscaler-code: unknown code {ds_code}")
    cfg = BuildConfig(
        epsilon=epsilon, min_chunk=min_chunk, min_level=min_level,
        max_level=max_level, downscaler=_DOWNSCALER_FROM_CODE[ds_code],
    )
    root = _decode_node(cur, ndim)
    if not cur.exhausted:
        raise InvariantViolation(
            f"file-complete: {len(cur.buf) - cur.pos} trailing bytes"
        )
    tree = SROctree(tuple(int(n) for n in full_dims), root, cfg)
    validate_tree(tree)
    return tree


def write_tree(t: SROctree, path: str | Path) -> None:
    Path(path).write_bytes(encode_tree(t))


def read_tree(path: str | Path) -> SROctree:
    return decode_tree(Path(path).read_bytes())
