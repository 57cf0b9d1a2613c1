"""Dense scalar-field container, region access, normalization, synthetic fields.

A :class:`Volume` wraps a C-contiguous float32 array of 2 or 3 dims.  The
flat layout is row-major with the last listed axis fastest-varying; every
module in the package (and both file formats) share that convention.

``create_volume`` is the validating entry point.  Internal kernels build
``Volume`` objects directly from arrays they already trust.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    LengthMismatch,
    NonFiniteValue,
    NonPositiveForLog,
    OutOfBounds,
    ShapeMismatch,
    UnknownKind,
)

SYNTHETIC_KINDS = ("constant", "checker", "gaussian_blobs", "band_limited_noise")


@dataclass(frozen=True)
class ValueRange:
    """Original value range of a field before it was normalized to [0, 1].

    ``log10`` marks fields that were log-scaled before the affine map; the
    recorded ``lo``/``hi`` are always in the original (linear) data units.
    """

    lo: float
    hi: float
    log10: bool = False


@dataclass(frozen=True)
class Region:
    """Axis-aligned box in voxel coordinates: per-axis origin and extent."""

    origin: tuple[int, ...]
    extent: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(int(o) for o in self.origin))
        object.__setattr__(self, "extent", tuple(int(e) for e in self.extent))
        if len(self.origin) != len(self.extent):
            raise ShapeMismatch("region origin and extent differ in rank")

    @property
    def ndim(self) -> int:
        return len(self.origin)

    @property
    def voxels(self) -> int:
        return int(np.prod(self.extent))

    def slices(self) -> tuple[slice, ...]:
        return tuple(slice(o, o + e) for o, e in zip(self.origin, self.extent))

    def check_inside(self, dims: Sequence[int]) -> None:
        if len(dims) != self.ndim:
            raise OutOfBounds(f"region rank {self.ndim} vs volume rank {len(dims)}")
        for o, e, n in zip(self.origin, self.extent, dims):
            if o < 0 or e < 1 or o + e > n:
                raise OutOfBounds(
                    f"region origin={self.origin} extent={self.extent} "
                    f"outside dims={tuple(dims)}"
                )


@dataclass
class Volume:
    """Dense scalar field: float32 values on a 2D or 3D regular grid."""

    data: np.ndarray
    meta: ValueRange | None = None

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def copy(self) -> "Volume":
        return Volume(self.data.copy(), self.meta)


def create_volume(dims: Sequence[int], data: Iterable[float] | np.ndarray,
                  meta: ValueRange | None = None) -> Volume:
    """Build a validated Volume from flat data in row-major order."""
    dims = tuple(int(d) for d in dims)
    if len(dims) not in (2, 3) or any(d < 1 for d in dims):
        raise LengthMismatch(f"dims must be 2 or 3 positive axis counts, got {dims}")
    arr = np.asarray(data, dtype=np.float32).ravel()
    if arr.size != int(np.prod(dims)):
        raise LengthMismatch(
            f"data length {arr.size} != product of dims {int(np.prod(dims))}"
        )
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue("volume data contains NaN or Inf")
    return Volume(arr.reshape(dims).copy(), meta)


def normalize(v: Volume, mode: str = "linear") -> Volume:
    """Map values to [0, 1] and record the original range in ``meta``.

    ``linear`` applies an affine map from [min, max].  ``log_then_linear``
    takes log10 first (all values must be > 0).  A constant field maps to
    all zeros rather than raising, so degenerate test fields still flow
    through the pipeline.
    """
    x = v.data.astype(np.float64)
    lo = float(x.min())
    hi = float(x.max())
    if mode == "linear":
        y = x
        meta = ValueRange(lo, hi, log10=False)
    elif mode == "log_then_linear":
        if lo <= 0.0:
            raise NonPositiveForLog(f"log normalization needs values > 0, min is {lo}")
        y = np.log10(x)
        meta = ValueRange(lo, hi, log10=True)
    else:
        raise UnknownKind(f"unknown normalization mode {mode!r}")
    ylo = y.min()
    yhi = y.max()
    if yhi == ylo:
        out = np.zeros_like(y, dtype=np.float32)
    else:
        out = np.clip((y - ylo) / (yhi - ylo), 0.0, 1.0).astype(np.float32)
    return Volume(out, meta)


def denormalize(v: Volume) -> Volume:
    """Invert :func:`normalize` using the range recorded in ``meta``."""
    if v.meta is None:
        raise ValueError("volume carries no value-range meta; cannot denormalize")
    m = v.meta
    y = v.data.astype(np.float64)
    if m.log10:
        llo, lhi = np.log10(m.lo), np.log10(m.hi)
        out = np.power(10.0, y * (lhi - llo) + llo)
    else:
        out = y * (m.hi - m.lo) + m.lo
    return Volume(out.astype(np.float32), None)


def read_region(v: Volume, r: Region) -> Volume:
    """Dense copy of the sub-block covered by ``r``."""
    r.check_inside(v.dims)
    return Volume(v.data[r.slices()].copy(), v.meta)


def write_region(v: Volume, r: Region, patch: Volume) -> Volume:
    """Overwrite the voxels inside ``r`` with ``patch``, bit-exactly.

    Mutates ``v`` in place and returns it; callers needing the original
    must copy first.  Voxels outside ``r`` are untouched.
    """
    r.check_inside(v.dims)
    if tuple(patch.dims) != tuple(r.extent):
        raise ShapeMismatch(f"patch dims {patch.dims} != region extent {r.extent}")
    v.data[r.slices()] = patch.data
    return v


def _minmax_to_unit(x: np.ndarray) -> tuple[np.ndarray, float, float]:
    lo = float(x.min())
    hi = float(x.max())
    if hi == lo:
        return np.zeros_like(x), lo, hi
    return np.clip((x - lo) / (hi - lo), 0.0, 1.0), lo, hi


def gen_synthetic(kind: str, dims: Sequence[int], seed: int = 0) -> Volume:
    """Deterministic test field of the requested kind, values in [0, 1].

    Kinds:
      constant            one seed-derived value everywhere
      checker             coordinate-parity 0/1 pattern, cell size 1 voxel
      gaussian_blobs      a few smooth bumps on a flat background
      band_limited_noise  white noise low-passed in Fourier space
    """
    dims = tuple(int(d) for d in dims)
    if len(dims) not in (2, 3) or any(d < 1 for d in dims):
        raise LengthMismatch(f"dims must be 2 or 3 positive axis counts, got {dims}")
    rng = np.random.default_rng(seed)

    if kind == "constant":
        value = float(rng.uniform(0.0, 1.0))
        return Volume(np.full(dims, value, dtype=np.float32))

    if kind == "checker":
        parity = np.indices(dims).sum(axis=0) % 2
        return Volume(parity.astype(np.float32))

    if kind == "gaussian_blobs":
        # widths span sharp cores to broad bumps so error-bounded trees
        # come out with genuinely mixed levels
        grids = np.meshgrid(*[np.arange(n, dtype=np.float64) for n in dims],
                            indexing="ij")
        field = np.zeros(dims, dtype=np.float64)
        n_blobs = int(rng.integers(5, 10))
        for _ in range(n_blobs):
            center = [rng.uniform(0.15 * n, 0.85 * n) for n in dims]
            sigma = rng.uniform(0.015, 0.10) * min(dims)
            amp = rng.uniform(0.4, 1.0)
            d2 = sum((g - c) ** 2 for g, c in zip(grids, center))
            field += amp * np.exp(-d2 / (2.0 * sigma * sigma))
        unit, lo, hi = _minmax_to_unit(field)
        return Volume(unit.astype(np.float32), ValueRange(lo, hi))

    if kind == "band_limited_noise":
        white = rng.standard_normal(dims)
        freqs = np.meshgrid(*[np.fft.fftfreq(n) for n in dims], indexing="ij")
        radius = np.sqrt(sum(f ** 2 for f in freqs))
        cutoff = rng.uniform(0.06, 0.18)
        spectrum = np.fft.fftn(white) * (radius <= cutoff)
        field = np.real(np.fft.ifftn(spectrum))
        unit, lo, hi = _minmax_to_unit(field)
        return Volume(unit.astype(np.float32), ValueRange(lo, hi))

    raise UnknownKind(f"unknown synthetic kind {kind!r}; expected one of {SYNTHETIC_KINDS}")
