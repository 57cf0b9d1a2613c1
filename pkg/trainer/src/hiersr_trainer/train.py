"""Training loop and model artifacts.

One call trains one level's 2x upscaler: L1 loss on random crops with
random flips, batch size 1, Adam.  Fixed seeds make runs reproducible on
the same machine.  Artifacts carry the level, the downscaler the pairs
were built with, and a hash of the training data.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .data import PairSampler
from .model import Upscaler2xNet


@dataclass
class TrainConfig:
    level: int
    iterations: int = 1500
    crop: int = 96
    downscaler: str = "mean"
    learning_rate: float = 1e-3
    channels: int = 32
    blocks: int = 3
    seed: int = 0
    batch_size: int = field(default=1, init=False)  # fixed by design

    def validate(self) -> None:
        if self.level < 0:
            raise ValueError(f"level must be >= 0, got {self.level}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.downscaler not in ("mean", "subsample"):
            raise ValueError(f"unknown downscaler {self.downscaler!r}")


def _data_hash(volumes: list[np.ndarray]) -> str:
    digest = hashlib.sha256()
    for v in volumes:
        digest.update(str(v.shape).encode())
        digest.update(np.ascontiguousarray(v, dtype="<f4").tobytes())
    return digest.hexdigest()


def train_level(volumes: list[np.ndarray], cfg: TrainConfig) -> dict:
    """Train one model; returns the artifact as a plain dict."""
    cfg.validate()
    ndim = volumes[0].ndim if volumes else 2
    rng = np.random.default_rng(cfg.seed)
    torch.manual_seed(cfg.seed)
    sampler = PairSampler(volumes, cfg.level, cfg.crop, cfg.downscaler, rng)

    net = Upscaler2xNet(ndim=ndim, channels=cfg.channels, blocks=cfg.blocks)
    opt = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
    # linear decay to zero: L1 subgradients do not shrink near the optimum,
    # so a constant step size would leave the weights jittering at lr scale
    schedule = torch.optim.lr_scheduler.LambdaLR(
        opt, lambda step: 1.0 - step / cfg.iterations
    )
    final_loss = float("nan")
    for _ in range(cfg.iterations):
        lr_c, hr_c = sampler.sample()
        x = torch.from_numpy(lr_c)[None, None]
        y = torch.from_numpy(hr_c)[None, None]
        opt.zero_grad()
        loss = F.l1_loss(net(x), y)
        loss.backward()
        opt.step()
        schedule.step()
        final_loss = float(loss.detach())

    return {
        "state_dict": net.state_dict(),
        "level": cfg.level,
        "ndim": ndim,
        "channels": cfg.channels,
        "blocks": cfg.blocks,
        "downscaler": cfg.downscaler,
        "iterations": cfg.iterations,
        "crop": sampler.crop,
        "seed": cfg.seed,
        "final_loss": final_loss,
        "data_hash": _data_hash(volumes),
    }


def save_artifact(artifact: dict, path: str | Path) -> None:
    torch.save(artifact, Path(path))


def load_artifact(path: str | Path) -> tuple[Upscaler2xNet, dict]:
    artifact = torch.load(Path(path), map_location="cpu", weights_only=False)
    net = Upscaler2xNet(ndim=artifact["ndim"], channels=artifact["channels"],
                        blocks=artifact["blocks"])
    net.load_state_dict(artifact["state_dict"])
    net.eval()
    return net, artifact
