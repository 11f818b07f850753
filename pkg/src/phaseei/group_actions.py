"""Cyclic 2D pixel translations: the invariance group used for self-supervision."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Union

import torch

from .sensing import ComplexImage, ShapeError


@dataclass(frozen=True)
class ShiftTransform:
    """Toroidal pixel shift by (dr, dc) on a height-by-width grid."""

    dr: int
    dc: int
    height: int
    width: int

    def __post_init__(self):
        if self.height <= 0 or self.width <= 0:
            raise ValueError("grid dimensions must be positive")
        object.__setattr__(self, "dr", self.dr % self.height)
        object.__setattr__(self, "dc", self.dc % self.width)

    def is_identity(self) -> bool:
        return self.dr == 0 and self.dc == 0


def apply(g: ShiftTransform, x: Union[ComplexImage, torch.Tensor]):
    """Shift pixels cyclically: output (r, c) = input ((r - dr) % H, (c - dc) % W).

    Accepts a ComplexImage or a tensor whose last two dims are (H, W);
    the tensor path is a differentiable pass-through (pure permutation).
    """
    if isinstance(x, ComplexImage):
        if (x.height, x.width) != (g.height, g.width):
            raise ShapeError("image shape does not match the transform grid")
        rolled = torch.roll(x.grid(), shifts=(g.dr, g.dc), dims=(-2, -1))
        return ComplexImage(rolled.reshape(-1), x.height, x.width)
    if x.shape[-2:] != (g.height, g.width):
        raise ShapeError("tensor shape does not match the transform grid")
    return torch.roll(x, shifts=(g.dr, g.dc), dims=(-2, -1))


def compose(g1: ShiftTransform, g2: ShiftTransform) -> ShiftTransform:
    """apply(compose(g1, g2), x) == apply(g1, apply(g2, x))."""
    if (g1.height, g1.width) != (g2.height, g2.width):
        raise ShapeError("transforms act on different grids")
    return ShiftTransform(g1.dr + g2.dr, g1.dc + g2.dc, g1.height, g1.width)


def inverse(g: ShiftTransform) -> ShiftTransform:
    return ShiftTransform(-g.dr, -g.dc, g.height, g.width)


def sample_shifts(
    count: int,
    height: int,
    width: int,
    generator: torch.Generator,
) -> List[ShiftTransform]:
    """Draw ``count`` distinct non-identity shifts uniformly from the group.

    Deterministic given the generator state.  The identity contributes no
    training signal and is excluded.
    """
    size = height * width
    if count < 1 or count > size - 1:
        raise ValueError(f"count must be in [1, {size - 1}]")
    idx = torch.randperm(size - 1, generator=generator)[:count] + 1
    return [ShiftTransform(int(i) // width, int(i) % width, height, width) for i in idx]
