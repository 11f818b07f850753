"""Classical per-sample phase retrieval by plain gradient descent with restarts.

Minimizes the amplitude objective ||sqrt(y) - |A x|||^2 (intensity selectable)
with a fixed step size; gradients with respect to the complex iterate are taken
via its real and imaginary parts.  Defaults were calibrated by a Monte-Carlo
run at alpha=4 (see scripts/calibrate_baseline.py).
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .sensing import ComplexImage, SensingOperator, ShapeError
from .reconstructor import backproject


@dataclass
class GdConfig:
    steps: int = 2000
    step_size: float = 0.5
    init: str = "backprojection"  # or "random"
    restarts: int = 5
    seed: int = 0
    objective: str = "amplitude"  # or "intensity"

    def __post_init__(self):
        if self.steps < 1 or self.restarts < 1:
            raise ValueError("steps and restarts must be >= 1")
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.init not in ("backprojection", "random"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.objective not in ("amplitude", "intensity"):
            raise ValueError(f"unknown objective {self.objective!r}")


def objective_value(x: torch.Tensor, y: torch.Tensor, op: SensingOperator, kind: str) -> torch.Tensor:
    """Residual objective per row of x (..., n) against a single y (m,)."""
    yh = torch.abs(x @ op.matrix.to(x.dtype).mT) ** 2
    if kind == "amplitude":
        r = torch.sqrt(y.clamp_min(0.0)).to(yh.dtype) - torch.sqrt(yh.clamp_min(0.0))
    else:
        r = y.to(yh.dtype) - yh
    return (r ** 2).sum(dim=-1)


def solve(
    y: torch.Tensor,
    op: SensingOperator,
    cfg: GdConfig,
    x0: torch.Tensor = None,
) -> tuple[ComplexImage, float]:
    """Best-of-restarts fixed-step descent; returns (estimate, final objective).

    The first restart starts from ``x0`` when given, else from the
    backprojection A^H sqrt(y) when cfg.init == "backprojection"; remaining
    restarts use seeded complex Gaussian draws.  The best iterate seen (per
    restart) is kept, so the returned objective never exceeds the
    initialization's.
    """
    if y.shape != (op.m,):
        raise ShapeError(f"expected an m-vector of length {op.m}")
    gen = torch.Generator().manual_seed(cfg.seed)
    dtype = op.matrix.dtype
    real_dtype = torch.float64 if dtype == torch.complex128 else torch.float32

    inits = []
    n_random = cfg.restarts
    if x0 is not None:
        inits.append(x0.reshape(-1).to(dtype))
        n_random -= 1
    elif cfg.init == "backprojection":
        inits.append(backproject(y, op).values.to(dtype))
        n_random -= 1
    for _ in range(n_random):
        re = torch.randn(op.n, generator=gen, dtype=real_dtype)
        im = torch.randn(op.n, generator=gen, dtype=real_dtype)
        inits.append(torch.complex(re, im))
    x = torch.stack(inits).requires_grad_(True)  # (R, n)

    best_x = x.detach().clone()
    best_obj = objective_value(best_x, y, op, cfg.objective)
    for _ in range(cfg.steps):
        obj = objective_value(x, y, op, cfg.objective)
        grad = torch.autograd.grad(obj.sum(), x)[0]
        with torch.no_grad():
            x -= cfg.step_size * grad
            obj_now = objective_value(x, y, op, cfg.objective)
            better = obj_now < best_obj
            best_obj = torch.where(better, obj_now, best_obj)
            best_x[better] = x.detach()[better]

    k = int(torch.argmin(best_obj))
    return ComplexImage(best_x[k], op.height, op.width), float(best_obj[k])
