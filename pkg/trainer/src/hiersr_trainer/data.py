"""Training pairs: downscale ground truth to the two levels a model maps
between, then sample aligned random crops with random flips."""
from __future__ import annotations

import numpy as np

from .errors import EmptySet, IndivisibleDimension


def downscale2x(arr: np.ndarray, method: str = "mean") -> np.ndarray:
    if any(n < 2 or n % 2 for n in arr.shape):
        raise IndivisibleDimension(f"axes must be even to halve, got {arr.shape}")
    if method == "subsample":
        return arr[(slice(None, None, 2),) * arr.ndim].copy()
    blocks = arr.astype(np.float64).reshape(
        tuple(x for n in arr.shape for x in (n // 2, 2))
    )
    return blocks.mean(axis=tuple(range(1, 2 * arr.ndim, 2))).astype(np.float32)


def downscale_by(arr: np.ndarray, factor: int, method: str = "mean") -> np.ndarray:
    if any(n % factor for n in arr.shape):
        raise IndivisibleDimension(f"dims {arr.shape} not divisible by {factor}")
    while factor > 1:
        arr = downscale2x(arr, method)
        factor //= 2
    return arr


class PairSampler:
    """Yields (lr_crop, hr_crop) arrays for one level's model.

    Each source volume is downscaled to level ``level`` (the model's
    output side) and once more for the input side.  Crops start at
    even offsets on the output grid so the two sides stay aligned, and
    are flipped along a random subset of axes.
    """

    def __init__(self, volumes: list[np.ndarray], level: int, crop: int,
                 method: str, rng: np.random.Generator):
        if not volumes:
            raise EmptySet("need at least one training volume")
        self.pairs = []
        for v in volumes:
            if any(n % (1 << (level + 1)) for n in v.shape):
                raise IndivisibleDimension(
                    f"volume dims {v.shape} not divisible by 2^{level + 1}"
                )
            hr = downscale_by(np.asarray(v, dtype=np.float32), 1 << level, method)
            self.pairs.append((downscale2x(hr, method), hr))
        self.rng = rng
        smallest = min(min(hr.shape) for _, hr in self.pairs)
        self.crop = max(4, min(crop, smallest)) // 2 * 2

    def sample(self) -> tuple[np.ndarray, np.ndarray]:
        lr, hr = self.pairs[int(self.rng.integers(len(self.pairs)))]
        crop = self.crop
        origin = [int(self.rng.integers(0, n - crop + 1)) // 2 * 2
                  for n in hr.shape]
        hr_sl = tuple(slice(o, o + crop) for o in origin)
        lr_sl = tuple(slice(o // 2, (o + crop) // 2) for o in origin)
        hr_c, lr_c = hr[hr_sl], lr[lr_sl]
        for axis in range(hr.ndim):
            if self.rng.integers(2):
                hr_c = np.flip(hr_c, axis)
                lr_c = np.flip(lr_c, axis)
        return np.ascontiguousarray(lr_c), np.ascontiguousarray(hr_c)
