"""Learned inverse map: adjoint backprojection front-end + real 2-channel U-Net."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from typing import Union

import torch
import torch.nn as nn
import torch.nn.functional as F

from .sensing import ComplexImage, SensingOperator, ShapeError, adjoint_batch

CHECKPOINT_FORMAT = "phaseei-ckpt-v1"


@dataclass
class ReconstructorConfig:
    scales: int = 4
    base_channels: int = 32
    in_channels: int = 2
    out_channels: int = 2
    image_height: int = 28
    image_width: int = 28

    def padded_size(self) -> int:
        # smallest multiple of 2**scales covering both image dims
        step = 2 ** self.scales
        side = max(self.image_height, self.image_width)
        return ((side + step - 1) // step) * step


def backproject(y: torch.Tensor, op: SensingOperator) -> Union[ComplexImage, torch.Tensor]:
    """A^H sqrt(y): parameter-free, differentiable embedding into image space.

    A 1D y gives a ComplexImage; a (B, m) stack gives a complex (B, H, W) tensor.
    """
    if y.shape[-1] != op.m:
        raise ShapeError(f"expected measurement length {op.m}")
    amp = torch.sqrt(y.clamp_min(0.0)).to(op.matrix.dtype)
    if y.ndim == 1:
        out = adjoint_batch(op, amp.unsqueeze(0))[0]
        return ComplexImage(out, op.height, op.width)
    return adjoint_batch(op, amp).reshape(-1, op.height, op.width)


def _block(cin, cout):
    return nn.Sequential(
        nn.Conv2d(cin, cout, 3, padding=1),
        nn.BatchNorm2d(cout),
        nn.ReLU(inplace=True),
        nn.Conv2d(cout, cout, 3, padding=1),
        nn.BatchNorm2d(cout),
        nn.ReLU(inplace=True),
    )


class UNet(nn.Module):
    """Standard encoder/decoder with skip connections; depth = cfg.scales."""

    def __init__(self, cfg: ReconstructorConfig):
        super().__init__()
        self.cfg = cfg
        chans = [cfg.base_channels * 2 ** k for k in range(cfg.scales)]
        self.down = nn.ModuleList()
        cin = cfg.in_channels
        for c in chans:
            self.down.append(_block(cin, c))
            cin = c
        self.bottleneck = _block(chans[-1], chans[-1] * 2)
        self.up_convs = nn.ModuleList()
        self.up_blocks = nn.ModuleList()
        cin = chans[-1] * 2
        for c in reversed(chans):
            self.up_convs.append(nn.ConvTranspose2d(cin, c, 2, stride=2))
            self.up_blocks.append(_block(2 * c, c))
            cin = c
        self.head = nn.Conv2d(chans[0], cfg.out_channels, 1)

    def forward(self, x):
        skips = []
        for block in self.down:
            x = block(x)
            skips.append(x)
            x = F.max_pool2d(x, 2)
        x = self.bottleneck(x)
        for up, block, skip in zip(self.up_convs, self.up_blocks, reversed(skips)):
            x = up(x)
            x = block(torch.cat([x, skip], dim=1))
        return self.head(x)


class PhaseReconstructor(nn.Module):
    """f_theta: measurement stack (B, m) -> complex image stack (B, H, W)."""

    def __init__(self, cfg: ReconstructorConfig, op: SensingOperator):
        super().__init__()
        if op.height != cfg.image_height or op.width != cfg.image_width:
            raise ValueError("operator layout does not match the model config")
        self.cfg = cfg
        self.op = op
        self.unet = UNet(cfg)

    def forward(self, y: torch.Tensor) -> torch.Tensor:
        bp = backproject(y, self.op)  # (B, H, W) complex
        planes = torch.stack([bp.real, bp.imag], dim=1)  # (B, 2, H, W)
        size = self.cfg.padded_size()
        ph = size - self.cfg.image_height
        pw = size - self.cfg.image_width
        planes = F.pad(planes, (pw // 2, pw - pw // 2, ph // 2, ph - ph // 2))
        out = self.unet(planes)
        out = out[:, :, ph // 2 : ph // 2 + self.cfg.image_height,
                  pw // 2 : pw // 2 + self.cfg.image_width]
        return torch.complex(out[:, 0], out[:, 1])

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())


def reconstruct(model: PhaseReconstructor, y: torch.Tensor, op: SensingOperator) -> ComplexImage:
    """Single-measurement inference; deterministic in eval mode."""
    if op.m != model.op.m or op.n != model.op.n:
        raise ValueError("operator does not match the model's configuration")
    if y.shape != (op.m,):
        raise ShapeError(f"expected an m-vector of length {op.m}")
    was_training = model.training
    model.eval()
    with torch.no_grad():
        out = model(y.unsqueeze(0))[0]
    if was_training:
        model.train()
    return ComplexImage(out.reshape(-1), op.height, op.width)


def manifest_digest(manifest: dict) -> str:
    return hashlib.sha256(json.dumps(manifest, sort_keys=True).encode()).hexdigest()


def save_checkpoint(path, model: PhaseReconstructor, epoch: int, manifest: dict = None):
    torch.save(
        {
            "format": CHECKPOINT_FORMAT,
            "config": asdict(model.cfg),
            "state_dict": model.state_dict(),
            "epoch": epoch,
            "manifest": manifest or {},
            "manifest_digest": manifest_digest(manifest or {}),
        },
        path,
    )


def load_checkpoint(path, op: SensingOperator) -> tuple[PhaseReconstructor, dict]:
    blob = torch.load(path, map_location="cpu", weights_only=False)
    if blob.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unrecognized checkpoint format {blob.get('format')!r}")
    model = PhaseReconstructor(ReconstructorConfig(**blob["config"]), op)
    model.load_state_dict(blob["state_dict"])
    model.eval()
    return model, blob
