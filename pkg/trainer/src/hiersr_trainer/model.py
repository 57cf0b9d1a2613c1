"""Small residual CNN that doubles every spatial axis.

The network predicts a correction on top of a bilinear/trilinear upsample
of its input; the learned path is a few residual conv blocks followed by
a single pixel/voxel shuffle that provides the 2x upscale.  All
convolutions use reflection padding.  2D and 3D variants share the
structure.
"""
from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn


class VoxelShuffle(nn.Module):
    """PixelShuffle generalized to 3D: (B, C*8, D, H, W) -> (B, C, 2D, 2H, 2W)."""

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, c8, d, h, w = x.shape
        c = c8 // 8
        x = x.view(b, c, 2, 2, 2, d, h, w)
        x = x.permute(0, 1, 5, 2, 6, 3, 7, 4)
        return x.reshape(b, c, 2 * d, 2 * h, 2 * w)


def _conv(ndim: int, cin: int, cout: int) -> nn.Module:
    cls = nn.Conv2d if ndim == 2 else nn.Conv3d
    return cls(cin, cout, kernel_size=3, padding=1, padding_mode="reflect")


class ResidualBlock(nn.Module):
    def __init__(self, ndim: int, channels: int):
        super().__init__()
        self.conv1 = _conv(ndim, channels, channels)
        self.conv2 = _conv(ndim, channels, channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.conv2(F.relu(self.conv1(x)))


class Upscaler2xNet(nn.Module):
    def __init__(self, ndim: int = 2, channels: int = 32, blocks: int = 3):
        super().__init__()
        if ndim not in (2, 3):
            raise ValueError(f"ndim must be 2 or 3, got {ndim}")
        self.ndim = ndim
        self.channels = channels
        self.blocks = blocks
        self.head = _conv(ndim, 1, channels)
        self.body = nn.Sequential(*[ResidualBlock(ndim, channels)
                                    for _ in range(blocks)])
        factor = 2 ** ndim
        self.pre_shuffle = _conv(ndim, channels, factor)
        self.shuffle = nn.PixelShuffle(2) if ndim == 2 else VoxelShuffle()
        self.interp_mode = "bilinear" if ndim == 2 else "trilinear"

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        base = F.interpolate(x, scale_factor=2, mode=self.interp_mode,
                             align_corners=False)
        h = self.body(self.head(x))
        return base + self.shuffle(self.pre_shuffle(h))

    @torch.no_grad()
    def upscale_array(self, data) -> "torch.Tensor":
        """Inference on a bare (unbatched, single-channel) array."""
        was_training = self.training
        self.eval()
        x = torch.as_tensor(data, dtype=torch.float32)[None, None]
        out = self.forward(x)[0, 0]
        if was_training:
            self.train()
        return out
