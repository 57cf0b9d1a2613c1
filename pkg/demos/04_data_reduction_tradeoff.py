"""Data reduction: adaptive trees vs. uniform downscaling.

Sweeps the error bound to trace the reduction-factor / PSNR trade-off of
the hierarchical pipeline, and marks the uniform 2x and 4x pipelines for
comparison.  Around the uniform operating points the adaptive curve sits
above: at equal storage it spends resolution where the field needs it.
"""
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from hiersr import (
    BuildConfig,
    UpscalerHierarchy,
    build_sr_octree,
    gen_synthetic,
    hierarchical_downscale,
    hierarchical_upscale,
    psnr,
    reduction_factor,
    upscale2x_linear,
)

out_dir = pathlib.Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

LINEAR = UpscalerHierarchy.uniform(upscale2x_linear)
field = gen_synthetic("gaussian_blobs", (64, 64, 64), seed=1)


def run(config):
    tree = build_sr_octree(field, config)
    recon = hierarchical_upscale(hierarchical_downscale(tree), tree, LINEAR)
    return reduction_factor(tree), psnr(field, recon)


adaptive = []
for epsilon in (0.01, 0.02, 0.04, 0.08, 0.12, 0.16, 0.22, 0.3):
    reduction, quality = run(BuildConfig(epsilon=epsilon, min_level=1,
                                         max_level=3))
    adaptive.append((reduction, quality))
    print(f"adaptive eps={epsilon:<5}: {reduction:7.1f}x  {quality:6.2f} dB")

uniform = []
for level in (1, 2):
    reduction, quality = run(BuildConfig(epsilon=0.0, min_level=level,
                                         max_level=level))
    uniform.append((reduction, quality))
    print(f"uniform level {level}:    {reduction:7.1f}x  {quality:6.2f} dB")

fig, ax = plt.subplots(figsize=(6, 4.2))
ax.plot(*zip(*adaptive), "o-", label="adaptive tree (min 1, max 3)")
ax.plot(*zip(*uniform), "s", color="crimson", label="uniform downscale")
for (r, q), lvl in zip(uniform, (1, 2)):
    ax.annotate(f"{2 ** lvl}x/axis", (r, q), textcoords="offset points",
                xytext=(6, 4), fontsize=8)
ax.set_xscale("log")
ax.set_xlabel("data reduction factor")
ax.set_ylabel("PSNR (dB)")
ax.grid(alpha=0.3)
ax.legend()
fig.tight_layout()
fig.savefig(out_dir / "04_reduction_tradeoff.png", dpi=120)
print("wrote", out_dir / "04_reduction_tradeoff.png")
