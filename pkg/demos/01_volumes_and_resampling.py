"""Volumes, normalization, and the 2x resampling kernels.

Walks through the basic containers: building a field, normalizing it,
reading and writing sub-regions, and the downscale/upscale kernels with
their cell-center convention.  Saves a figure comparing nearest and
linear upscaling of a coarsened field.
"""
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from hiersr import (
    Downscaler,
    Region,
    create_volume,
    denormalize,
    downscale_by,
    gen_synthetic,
    normalize,
    read_region,
    upscale2x_linear,
    upscale2x_nearest,
    write_region,
)

out_dir = pathlib.Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

# --- a tiny volume by hand -------------------------------------------------
v = create_volume((2, 3), [0, 1, 2, 3, 4, 5])
print("dims:", v.dims)
print("data:\n", v.data)

# normalization maps to [0, 1] and records the original range so it can
# be undone; log scaling handles fields spanning decades
field = create_volume((1, 3), [1.0, 10.0, 100.0])
unit = normalize(field, "log_then_linear")
print("log-normalized:", unit.data, "meta:", unit.meta)
print("denormalized:  ", denormalize(unit).data)

# region access: rectangular reads and bit-exact overwrites
ramp = create_volume((4, 4), np.arange(16, dtype=np.float32) / 15.0)
corner = read_region(ramp, Region((0, 0), (2, 2)))
write_region(ramp, Region((2, 2), (2, 2)), corner)
print("after pasting the top-left corner into the bottom-right:\n", ramp.data)

# --- the 2x kernels ----------------------------------------------------------
blob = gen_synthetic("gaussian_blobs", (64, 64), seed=3)
coarse = downscale_by(blob, 4, Downscaler.MEAN_POOL)
print("downscaled 4x:", blob.dims, "->", coarse.dims)

near = upscale2x_nearest(upscale2x_nearest(coarse))
lin = upscale2x_linear(upscale2x_linear(coarse))

fig, axes = plt.subplots(1, 4, figsize=(14, 3.6))
for ax, (title, img) in zip(axes, [
    ("ground truth 64x64", blob.data),
    ("mean-pooled 16x16", coarse.data),
    ("nearest 2x2x", near.data),
    ("linear 2x2x (cell centers)", lin.data),
]):
    ax.imshow(img, cmap="magma", vmin=0, vmax=1)
    ax.set_title(title, fontsize=9)
    ax.axis("off")
fig.tight_layout()
fig.savefig(out_dir / "01_resampling.png", dpi=120)
print("wrote", out_dir / "01_resampling.png")

# the composability law behind every multi-level pass
once = downscale_by(blob, 4, Downscaler.MEAN_POOL)
twice = downscale_by(downscale_by(blob, 2, Downscaler.MEAN_POOL), 2,
                     Downscaler.MEAN_POOL)
print("down(V,4) vs down(down(V,2),2) max diff:",
      float(np.max(np.abs(once.data - twice.data))))
