"""Reconstruction quality metrics in data space, plus a seam score.

PSNR, SSIM, max absolute error and max relative error compare a
reconstruction against ground truth voxel-wise.  The seam score instead
asks whether voxel differences across leaf boundaries of a tree are
systematically larger than differences in leaf interiors; block-wise
upscaling inflates it, seam-free reconstruction does not.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from .errors import ShapeMismatch, TooSmallForWindow
from .octree import SROctree
from .volume import Volume

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

_SEAM_SAMPLE_SEED = 0x5EA7  # fixed so the score is a pure function of its inputs


@dataclass
class MetricReport:
    psnr_db: float
    ssim: float
    linf: float
    mre: float
    seam: float | None = None

    def to_text(self) -> str:
        lines = [f"psnr_db={self.psnr_db!r}", f"ssim={self.ssim!r}",
                 f"linf={self.linf!r}", f"mre={self.mre!r}"]
        if self.seam is not None:
            lines.append(f"seam={self.seam!r}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MetricReport":
        fields: dict[str, float] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            fields[key] = float(value)
        return cls(psnr_db=fields["psnr_db"], ssim=fields["ssim"],
                   linf=fields["linf"], mre=fields["mre"],
                   seam=fields.get("seam"))


def _check_same_dims(a: Volume, b: Volume) -> None:
    if tuple(a.dims) != tuple(b.dims):
        raise ShapeMismatch(f"volume dims differ: {a.dims} vs {b.dims}")


def psnr(a: Volume, b: Volume, data_range: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical inputs."""
    _check_same_dims(a, b)
    if data_range <= 0:
        raise ValueError(f"data_range must be > 0, got {data_range}")
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 20.0 * math.log10(data_range) - 10.0 * math.log10(mse)


def _gaussian_window_moments(x: np.ndarray) -> np.ndarray:
    # normalized 11-tap Gaussian per axis; truncate chosen so the radius is 5
    radius = (SSIM_WINDOW - 1) // 2
    truncate = radius / SSIM_SIGMA
    return ndimage.gaussian_filter(x, sigma=SSIM_SIGMA, truncate=truncate,
                                   mode="nearest")


def _crop_valid(x: np.ndarray) -> np.ndarray:
    radius = (SSIM_WINDOW - 1) // 2
    return x[(slice(radius, -radius),) * x.ndim]


def ssim(a: Volume, b: Volume, data_range: float = 1.0) -> float:
    """Mean structural similarity over all fully-contained windows.

    Gaussian window, 11 taps per axis (11x11 in 2D, 11^3 in 3D), sigma
    1.5, K1=0.01, K2=0.03, L=data_range; weighted moments are biased
    (no sample-size correction).
    """
    _check_same_dims(a, b)
    if any(n < SSIM_WINDOW for n in a.dims):
        raise TooSmallForWindow(
            f"every axis must be >= {SSIM_WINDOW}, got {a.dims}"
        )
    x = a.data.astype(np.float64)
    y = b.data.astype(np.float64)
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    ux = _crop_valid(_gaussian_window_moments(x))
    uy = _crop_valid(_gaussian_window_moments(y))
    uxx = _crop_valid(_gaussian_window_moments(x * x))
    uyy = _crop_valid(_gaussian_window_moments(y * y))
    uxy = _crop_valid(_gaussian_window_moments(x * y))
    vx = uxx - ux * ux
    vy = uyy - uy * uy
    vxy = uxy - ux * uy
    ssim_map = ((2.0 * ux * uy + c1) * (2.0 * vxy + c2)) / \
               ((ux * ux + uy * uy + c1) * (vx + vy + c2))
    return float(ssim_map.mean())


def linf(a: Volume, b: Volume) -> float:
    """Max absolute voxel difference."""
    _check_same_dims(a, b)
    return float(np.max(np.abs(a.data.astype(np.float64) - b.data.astype(np.float64))))


def mre(a: Volume, b: Volume) -> float:
    """Max absolute difference relative to the ground truth's value range.

    The range comes from ``a``'s recorded meta when present, otherwise
    from its observed min/max.  A constant ground truth has no usable
    range: the result is 0 for a perfect match and +inf otherwise.
    """
    _check_same_dims(a, b)
    err = linf(a, b)
    if a.meta is not None:
        rng = a.meta.hi - a.meta.lo
    else:
        rng = float(a.data.max()) - float(a.data.min())
    if rng == 0.0:
        return 0.0 if err == 0.0 else math.inf
    return err / rng


def seam_metric(v: Volume, t: SROctree) -> float:
    """Excess voxel-difference across leaf boundaries, clamped at 0.

    Mean |difference| over all face-adjacent voxel pairs that straddle a
    leaf boundary, minus the same statistic over an equally sized sample
    of pairs interior to a leaf.  Zero means boundaries look no different
    from the rest of the field; higher means stronger seams.
    """
    if tuple(v.dims) != tuple(t.full_dims):
        raise ShapeMismatch(f"volume dims {v.dims} != tree domain {t.full_dims}")
    ids = np.empty(t.full_dims, dtype=np.int64)
    for index, leaf in enumerate(t.iter_leaves()):
        ids[leaf.region.slices()] = index
    data = v.data.astype(np.float64)
    boundary: list[np.ndarray] = []
    interior: list[np.ndarray] = []
    for axis in range(v.ndim):
        lo = tuple(slice(None, -1) if a == axis else slice(None)
                   for a in range(v.ndim))
        hi = tuple(slice(1, None) if a == axis else slice(None)
                   for a in range(v.ndim))
        cross = ids[lo] != ids[hi]
        diff = np.abs(data[lo] - data[hi])
        boundary.append(diff[cross])
        interior.append(diff[~cross])
    b = np.concatenate(boundary)
    i = np.concatenate(interior)
    if b.size == 0:
        return 0.0
    if i.size > b.size:
        rng = np.random.default_rng(_SEAM_SAMPLE_SEED)
        i = rng.choice(i, size=b.size, replace=False)
    if i.size == 0:
        return float(b.mean())
    return max(0.0, float(b.mean()) - float(i.mean()))


def evaluate(a: Volume, b: Volume, tree: SROctree | None = None,
             data_range: float = 1.0) -> MetricReport:
    """Full report comparing reconstruction ``b`` against ground truth ``a``."""
    return MetricReport(
        psnr_db=psnr(a, b, data_range),
        ssim=ssim(a, b, data_range),
        linf=linf(a, b),
        mre=mre(a, b),
        seam=None if tree is None else seam_metric(b, tree),
    )
