"""Phase-invariant evaluation: cosine similarity, phase alignment, scale recovery.

Reconstructions are only defined up to a global phase (and a positive scale),
so all quality numbers go through |<x, xh>| / (||x|| ||xh||).
"""

from __future__ import annotations

import warnings
from typing import Union

import torch

from .sensing import ComplexImage, SensingOperator, ShapeError, forward

EPS_NORM = 1e-12


class DegenerateInputError(ValueError):
    """A vector norm (or denominator) vanished where the metric needs it."""


def _vec(x) -> torch.Tensor:
    return x.values if isinstance(x, ComplexImage) else x


def cosine_similarity(
    x: Union[ComplexImage, torch.Tensor],
    xh: Union[ComplexImage, torch.Tensor],
    strict: bool = False,
) -> torch.Tensor:
    """|<x, xh>| / (||x|| ||xh||) over the last dimension.

    Invariant to global phase and positive scaling of either argument; equals 1
    exactly on the phase/scale orbit.  Near-zero vectors yield 0 (training mode)
    or raise DegenerateInputError when ``strict`` (evaluation mode).
    """
    a, b = _vec(x), _vec(xh)
    if a.shape[-1] != b.shape[-1]:
        raise ShapeError("vectors must have equal length")
    inner = torch.abs((a.conj() * b).sum(dim=-1))
    na = torch.linalg.vector_norm(a, dim=-1)
    nb = torch.linalg.vector_norm(b, dim=-1)
    degenerate = (na < EPS_NORM) | (nb < EPS_NORM)
    if bool(degenerate.any()):
        if strict:
            raise DegenerateInputError("zero-norm input to cosine similarity")
        # guarded denominator: collapsed outputs score 0, never NaN
        safe = torch.where(degenerate, torch.ones_like(na), na * nb)
        return torch.where(degenerate, torch.zeros_like(na), inner / safe)
    return inner / (na * nb)


def align_global_phase(
    reference: Union[ComplexImage, torch.Tensor],
    xh: Union[ComplexImage, torch.Tensor],
):
    """Rotate xh by the global phase that best matches the reference.

    Returns e^{-i arg<reference, xh>} xh, which maximizes Re<reference, .>
    over the phase orbit of xh.  A zero inner product leaves xh unchanged
    (with a warning): the orbit has no preferred representative.
    """
    a, b = _vec(reference), _vec(xh)
    if a.shape[-1] != b.shape[-1]:
        raise ShapeError("vectors must have equal length")
    inner = (a.conj() * b).sum(dim=-1)
    if bool((torch.abs(inner) < EPS_NORM).any()):
        warnings.warn("zero inner product; global phase is undefined, returning input")
        aligned = b
    else:
        phase = inner / torch.abs(inner)
        aligned = b * phase.conj().unsqueeze(-1) if b.ndim > 1 else b * phase.conj()
    if isinstance(xh, ComplexImage):
        return ComplexImage(aligned, xh.height, xh.width)
    return aligned


def recover_scale(
    y: torch.Tensor,
    xh: Union[ComplexImage, torch.Tensor],
    op: SensingOperator,
) -> float:
    """Least-squares scale r with |A xh|^2 ~= r^2 y.

    Fitting over all m components is robust to individual near-zero y_j.
    """
    yh = forward(op, _vec(xh).to(op.matrix.dtype))
    y = y.to(yh.dtype)
    denom = float((y * y).sum())
    if denom < EPS_NORM:
        raise DegenerateInputError("measurement vector is identically zero")
    num = float((yh * y).sum())
    if num <= 0:
        raise DegenerateInputError("forward(op, xh) is identically zero")
    return float(num / denom) ** 0.5
