"""2x downscaling / upscaling kernels and the per-level upscaler hierarchy.

Downscalers must compose: downscaling by 2 twice has to equal downscaling
by 4 once (exactly for subsampling, to float rounding for mean pooling).
That property is what lets tree nodes at different levels be reduced step
by step to one uniform grid.

Upscalers are plain callables Volume -> Volume that double every axis.
``UpscalerHierarchy`` picks one per downscaling level: the upscaler stored
at index ``i`` produces level-``i`` data from level ``i+1``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import (
    IndivisibleDimension,
    LevelOrder,
    NotPowerOfTwo,
    OddDimension,
    ShapeMismatch,
)
from .volume import Volume

Upscaler2x = Callable[[Volume], Volume]


class Downscaler(enum.Enum):
    """2x reduction rule: block mean or lowest-index corner sample."""

    MEAN_POOL = "mean"
    SUBSAMPLE = "subsample"

    @classmethod
    def from_name(cls, name: str) -> "Downscaler":
        key = name.strip().lower()
        for d in cls:
            if key in (d.value, d.name.lower()):
                return d
        raise ValueError(f"unknown downscaler {name!r}; use 'mean' or 'subsample'")


def _downscale2x_array(arr: np.ndarray, d: Downscaler) -> np.ndarray:
    for n in arr.shape:
        if n < 2 or n % 2:
            raise OddDimension(f"axes must be even and >= 2 to halve, got {arr.shape}")
    if d is Downscaler.SUBSAMPLE:
        return arr[(slice(None, None, 2),) * arr.ndim].copy()
    blocks = arr.astype(np.float64).reshape(
        tuple(x for n in arr.shape for x in (n // 2, 2))
    )
    return blocks.mean(axis=tuple(range(1, 2 * arr.ndim, 2))).astype(np.float32)


def _downscale_by_array(arr: np.ndarray, factor: int, d: Downscaler) -> np.ndarray:
    if factor < 1 or factor & (factor - 1):
        raise NotPowerOfTwo(f"factor must be a power of two, got {factor}")
    if any(n % factor for n in arr.shape):
        raise IndivisibleDimension(f"dims {arr.shape} not divisible by {factor}")
    while factor > 1:
        arr = _downscale2x_array(arr, d)
        factor //= 2
    return arr


def _repeat_array(arr: np.ndarray, factor: int) -> np.ndarray:
    for axis in range(arr.ndim):
        arr = np.repeat(arr, factor, axis=axis)
    return arr


def _upscale2x_linear_array(arr: np.ndarray) -> np.ndarray:
    # Cell-center resampling: output center j sits at coarse coordinate
    # (j + 0.5) / 2 - 0.5; coordinates past the border clamp to it.
    out = arr.astype(np.float64)
    for axis in range(arr.ndim):
        n = out.shape[axis]
        src = np.clip((np.arange(2 * n) + 0.5) / 2.0 - 0.5, 0.0, n - 1.0)
        i0 = np.floor(src).astype(np.intp)
        i1 = np.minimum(i0 + 1, n - 1)
        t = src - i0
        shape = [1] * out.ndim
        shape[axis] = 2 * n
        t = t.reshape(shape)
        a0 = np.take(out, i0, axis=axis)
        a1 = np.take(out, i1, axis=axis)
        out = a0 + t * (a1 - a0)  # exact on constants: t * 0 == 0
    return out.astype(np.float32)


def downscale2x(v: Volume, d: Downscaler = Downscaler.MEAN_POOL) -> Volume:
    """Halve every axis; each output voxel summarizes its 2^D parent block."""
    return Volume(_downscale2x_array(v.data, d), v.meta)


def downscale_by(v: Volume, factor: int, d: Downscaler = Downscaler.MEAN_POOL) -> Volume:
    """Downscale by a power-of-two factor via repeated 2x steps."""
    return Volume(_downscale_by_array(v.data, int(factor), d), v.meta)


def upscale2x_nearest(v: Volume) -> Volume:
    """Replicate each voxel into its 2^D block."""
    return Volume(_repeat_array(v.data, 2), v.meta)


def upscale2x_linear(v: Volume) -> Volume:
    """Bilinear/trilinear 2x upscaling under the cell-center convention."""
    return Volume(_upscale2x_linear_array(v.data), v.meta)


@dataclass(frozen=True)
class UpscalerHierarchy:
    """One 2x upscaler per downscaling level, with a fallback for the rest.

    ``for_level(i)`` returns the upscaler that produces level-``i`` data
    from level ``i+1``; the lookup is total thanks to ``fallback``.
    """

    per_level: Mapping[int, Upscaler2x] = field(default_factory=dict)
    fallback: Upscaler2x = upscale2x_nearest

    def for_level(self, level: int) -> Upscaler2x:
        return self.per_level.get(level, self.fallback)

    @classmethod
    def uniform(cls, up: Upscaler2x) -> "UpscalerHierarchy":
        return cls({}, up)


def _checked_upscale(up: Upscaler2x, v: Volume) -> Volume:
    out = up(v)
    if tuple(out.dims) != tuple(2 * n for n in v.dims):
        raise ShapeMismatch(
            f"upscaler returned dims {out.dims}, expected {tuple(2 * n for n in v.dims)}"
        )
    return out


def apply_hierarchy(h: UpscalerHierarchy, v: Volume,
                    from_level: int, to_level: int) -> Volume:
    """Upscale from one downscaling level to a finer one, 2x per step.

    Stepping from level ``i`` to ``i-1`` uses the upscaler registered at
    index ``i-1`` (the level it produces).  Dims grow by 2^(from-to).
    """
    if not 0 <= to_level < from_level:
        raise LevelOrder(f"need 0 <= to_level < from_level, got {from_level}->{to_level}")
    for i in range(from_level, to_level, -1):
        v = _checked_upscale(h.for_level(i - 1), v)
    return v
