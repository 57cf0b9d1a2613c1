"""Plugging a learned 2x model into the upscaler hierarchy.

Trains a small model with the companion trainer package (a minute or so
on a CPU), serves it as a child process speaking the wire protocol, and
reconstructs a held-out field once with pure linear interpolation and
once with the learned backend at the finest level.  Requires
``hiersr-trainer`` to be installed.
"""
import pathlib
import subprocess
import sys
import tempfile

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from hiersr import (
    BuildConfig,
    UpscalerHierarchy,
    build_sr_octree,
    connect,
    gen_synthetic,
    hierarchical_downscale,
    hierarchical_upscale,
    psnr,
    upscale2x_linear,
    write_volume,
)

out_dir = pathlib.Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

work = pathlib.Path(tempfile.mkdtemp(prefix="hiersr_demo_"))
train_files = []
for seed in range(6):
    path = work / f"train{seed}.hvol"
    write_volume(gen_synthetic("band_limited_noise", (128, 128), seed=seed), path)
    train_files.append(str(path))

artifact = work / "g0.pt"
print("training a level-0 model (this takes a short while on CPU)...")
subprocess.run(
    [sys.executable, "-m", "hiersr_trainer", "train", "--data", *train_files,
     "--level", "0", "--iterations", "1200", "--crop", "48",
     "--out", str(artifact)],
    check=True,
)

held_out = gen_synthetic("band_limited_noise", (128, 128), seed=77)
tree = build_sr_octree(held_out, BuildConfig(epsilon=0.04, min_level=1,
                                             max_level=2))
coarse = hierarchical_downscale(tree)

linear_recon = hierarchical_upscale(
    coarse, tree, UpscalerHierarchy.uniform(upscale2x_linear)
)

endpoint = (f"exec:{sys.executable} -m hiersr_trainer serve "
            f"--artifact {artifact} --stdio@level=0")
with connect(endpoint) as model:
    mixed = UpscalerHierarchy({0: model}, fallback=upscale2x_linear)
    model_recon = hierarchical_upscale(coarse, tree, mixed)

print(f"linear backend : {psnr(held_out, linear_recon):6.2f} dB")
print(f"learned backend: {psnr(held_out, model_recon):6.2f} dB")

err_l = np.abs(held_out.data - linear_recon.data)
err_m = np.abs(held_out.data - model_recon.data)
vmax = max(err_l.max(), err_m.max())
fig, axes = plt.subplots(1, 3, figsize=(12, 3.8))
for ax, (title, img, kw) in zip(axes, [
    ("held-out field", held_out.data, dict(cmap="magma", vmin=0, vmax=1)),
    ("|error| linear", err_l, dict(cmap="inferno", vmin=0, vmax=vmax)),
    ("|error| learned", err_m, dict(cmap="inferno", vmin=0, vmax=vmax)),
]):
    ax.imshow(img, **kw)
    ax.set_title(title, fontsize=10)
    ax.axis("off")
fig.tight_layout()
fig.savefig(out_dir / "05_learned_backend.png", dpi=120)
print("wrote", out_dir / "05_learned_backend.png")
