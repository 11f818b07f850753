"""Training objectives: measurement consistency, equivariance, supervised baseline.

Reductions are means over samples (and over sampled shifts) so the tradeoff
weight keeps its meaning across batch sizes; per-measurement residuals stay
summed inside each squared norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict

import torch

from .group_actions import sample_shifts
from .sensing import MeasurementBatch, SensingOperator, forward
from .metrics import cosine_similarity

# A reconstructor maps measurements (B, m) to complex images (B, H, W).
Reconstructor = Callable[[torch.Tensor], torch.Tensor]


@dataclass
class LossValue:
    total: torch.Tensor
    components: Dict[str, torch.Tensor] = field(default_factory=dict)

    def item(self) -> float:
        return float(self.total)


def _flat(x: torch.Tensor) -> torch.Tensor:
    return x.reshape(x.shape[0], -1)


def loss_mc_intensity(batch: MeasurementBatch, f: Reconstructor, op: SensingOperator) -> LossValue:
    """Mean over the batch of ||y - |A f(y)|^2||^2 (the intensity loss)."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    y = batch.measurements
    yh = forward(op, _flat(f(y)))
    total = ((y.to(yh.dtype) - yh) ** 2).sum(dim=-1).mean()
    return LossValue(total)


def loss_mc_amplitude(batch: MeasurementBatch, f: Reconstructor, op: SensingOperator) -> LossValue:
    """Mean over the batch of ||sqrt(y) - |A f(y)|||^2 (the amplitude loss).

    Shares its global minimum set with the intensity loss; the sqrt is clamped
    at 0 against floating-point cancellation (inputs are squared moduli).
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    y = batch.measurements
    if bool((y < 0).any()):
        raise ValueError("measurements must be nonnegative")
    yh = forward(op, _flat(f(y)))
    resid = torch.sqrt(y.to(yh.dtype)) - torch.sqrt(yh.clamp_min(0.0))
    total = (resid ** 2).sum(dim=-1).mean()
    return LossValue(total)


def loss_ei(
    batch: MeasurementBatch,
    f: Reconstructor,
    op: SensingOperator,
    shifts_per_image: int,
    generator: torch.Generator,
) -> LossValue:
    """Equivariance loss: -mean CS(T_g f(y), f(|A T_g f(y)|^2)).

    Fresh non-identity shifts are drawn per image; gradients flow through both
    appearances of f and through the remeasurement.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    if shifts_per_image < 1:
        raise ValueError("shifts_per_image must be >= 1")
    y = batch.measurements
    xh = f(y)  # (B, H, W)
    b = xh.shape[0]
    shifted = []
    for i in range(b):
        for g in sample_shifts(shifts_per_image, batch.height, batch.width, generator):
            shifted.append(torch.roll(xh[i], shifts=(g.dr, g.dc), dims=(0, 1)))
    x1 = torch.stack(shifted)  # (B*S, H, W)
    y2 = forward(op, _flat(x1))
    x2 = f(y2)
    cs = cosine_similarity(_flat(x1), _flat(x2))
    return LossValue(-cs.mean())


def loss_total(
    batch: MeasurementBatch,
    f: Reconstructor,
    op: SensingOperator,
    lam: float,
    mc_variant: str = "amplitude",
    shifts_per_image: int = 2,
    generator: torch.Generator = None,
) -> LossValue:
    """Self-supervised objective: MC + lam * EI, components recorded separately."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if mc_variant == "amplitude":
        mc = loss_mc_amplitude(batch, f, op).total
    elif mc_variant == "intensity":
        mc = loss_mc_intensity(batch, f, op).total
    else:
        raise ValueError(f"unknown mc_variant {mc_variant!r}")
    ei = loss_ei(batch, f, op, shifts_per_image, generator).total
    return LossValue(mc + lam * ei, components={"mc": mc, "ei": ei})


def loss_supervised(batch: MeasurementBatch, f: Reconstructor) -> LossValue:
    """Phase-blind supervision: -mean CS(x_i, f(y_i)); needs ground truth."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    if batch.truths is None:
        raise ValueError("supervised loss requires a batch with truths")
    xh = _flat(f(batch.measurements))
    cs = cosine_similarity(batch.truths.to(xh.dtype), xh)
    return LossValue(-cs.mean())
