"""Seam-free hierarchical reconstruction vs. the block-wise baseline.

Both start from the same mixed-level tree.  The block-wise baseline
upscales every leaf on its own and stitches the patches, so patch
borders only see clamped boundary data; the hierarchical pass upscales
the whole domain once per level and overwrites voxels the tree stores at
that level or finer.  The error maps make the difference visible along
leaf boundaries.
"""
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from hiersr import (
    BuildConfig,
    UpscalerHierarchy,
    blockwise_upscale,
    build_sr_octree,
    evaluate,
    gen_synthetic,
    hierarchical_downscale,
    hierarchical_upscale,
    level_map,
    upscale2x_linear,
)

out_dir = pathlib.Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

LINEAR = UpscalerHierarchy.uniform(upscale2x_linear)

field = gen_synthetic("gaussian_blobs", (128, 128), seed=4)
tree = build_sr_octree(field, BuildConfig(epsilon=0.01, min_level=1,
                                          max_level=3))
print(f"tree levels {tree.min_level}..{tree.max_level}, "
      f"{sum(1 for _ in tree.iter_leaves())} leaves")

coarse = hierarchical_downscale(tree)
hier = hierarchical_upscale(coarse, tree, LINEAR)
block = blockwise_upscale(tree, LINEAR)

for name, recon in (("hierarchical", hier), ("blockwise", block)):
    report = evaluate(field, recon, tree)
    print(f"{name:13s} psnr {report.psnr_db:6.2f} dB  ssim {report.ssim:.4f}  "
          f"seam {report.seam:.5f}")

err_h = np.abs(field.data - hier.data)
err_b = np.abs(field.data - block.data)
vmax = max(err_h.max(), err_b.max())

fig, axes = plt.subplots(1, 4, figsize=(15, 3.8))
panels = [
    ("levels", level_map(tree).data, dict(cmap="viridis")),
    ("ground truth", field.data, dict(cmap="magma", vmin=0, vmax=1)),
    ("|error| blockwise", err_b, dict(cmap="inferno", vmin=0, vmax=vmax)),
    ("|error| hierarchical", err_h, dict(cmap="inferno", vmin=0, vmax=vmax)),
]
for ax, (title, img, kw) in zip(axes, panels):
    ax.imshow(img, **kw)
    ax.set_title(title, fontsize=10)
    ax.axis("off")
fig.tight_layout()
fig.savefig(out_dir / "03_seams.png", dpi=120)
print("wrote", out_dir / "03_seams.png")
