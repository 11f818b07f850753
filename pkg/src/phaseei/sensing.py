"""Random complex Gaussian sensing operator and the intensity forward model.

The acquisition is y = |A x|^2 with A an m-by-n complex matrix whose entries
have independent real and imaginary parts drawn from N(0, 1/(2m)).  Signals
are unit-modulus phase images x = exp(i * x0) built from real images x0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import torch


class ShapeError(ValueError):
    """Dimension mismatch between an operator and its operand."""


def _as_tensor(x, dtype=None):
    if isinstance(x, torch.Tensor):
        t = x
    else:
        t = torch.as_tensor(np.asarray(x))
    if dtype is not None:
        t = t.to(dtype)
    return t


@dataclass
class ComplexImage:
    """A complex n-vector with its 2D pixel layout."""

    values: torch.Tensor  # complex, shape (n,)
    height: int
    width: int

    def __post_init__(self):
        self.values = _as_tensor(self.values)
        if not self.values.is_complex():
            self.values = self.values.to(torch.complex128)
        self.values = self.values.reshape(-1)
        if self.height <= 0 or self.width <= 0:
            raise ValueError("image dimensions must be positive")
        if self.values.numel() != self.height * self.width:
            raise ShapeError(
                f"expected {self.height * self.width} values, got {self.values.numel()}"
            )
        if not torch.isfinite(self.values.real).all() or not torch.isfinite(self.values.imag).all():
            raise ValueError("image contains non-finite entries")

    @property
    def n(self) -> int:
        return self.height * self.width

    def grid(self) -> torch.Tensor:
        """The (height, width) complex view of the pixel vector."""
        return self.values.reshape(self.height, self.width)

    def norm(self) -> float:
        return float(torch.linalg.vector_norm(self.values))


@dataclass
class SensingOperator:
    """Fixed complex m-by-n sensing matrix plus image-shape metadata."""

    matrix: torch.Tensor  # complex, shape (m, n)
    m: int
    n: int
    seed: int
    height: int
    width: int

    def __post_init__(self):
        if self.matrix.shape != (self.m, self.n):
            raise ShapeError(f"matrix shape {tuple(self.matrix.shape)} != ({self.m}, {self.n})")
        if self.height * self.width != self.n:
            raise ShapeError("height * width must equal n")

    def alpha(self) -> float:
        """Sampling ratio m/n."""
        return self.m / self.n


@dataclass
class MeasurementBatch:
    """Nonnegative intensity measurements, optionally paired with ground truth."""

    measurements: torch.Tensor  # real, shape (N, m)
    height: int
    width: int
    truths: Optional[torch.Tensor] = None  # complex, shape (N, n)

    def __post_init__(self):
        self.measurements = _as_tensor(self.measurements)
        if self.measurements.ndim != 2:
            raise ShapeError("measurements must be (N, m)")
        if bool((self.measurements < 0).any()):
            raise ValueError("measurements must be nonnegative")
        if self.truths is not None:
            self.truths = _as_tensor(self.truths)
            if self.truths.shape[0] != self.measurements.shape[0]:
                raise ShapeError("truths and measurements must have equal length")
            if self.truths.shape[1] != self.height * self.width:
                raise ShapeError("truth length must equal height * width")

    def __len__(self) -> int:
        return self.measurements.shape[0]

    def without_truths(self) -> "MeasurementBatch":
        return MeasurementBatch(self.measurements, self.height, self.width, truths=None)

    def truth_image(self, i: int) -> ComplexImage:
        if self.truths is None:
            raise ValueError("batch carries no ground truth")
        return ComplexImage(self.truths[i], self.height, self.width)


def make_operator(
    m: int,
    n: int,
    seed: int,
    height: Optional[int] = None,
    width: Optional[int] = None,
    dtype: torch.dtype = torch.complex64,
) -> SensingOperator:
    """Draw A with independent real/imag entries ~ N(0, 1/(2m)), reproducibly.

    ``height``/``width`` default to a square layout when n is a perfect square.
    """
    if m < 1 or n < 1:
        raise ValueError("operator dimensions must be positive")
    if height is None or width is None:
        side = int(math.isqrt(n))
        if side * side != n:
            raise ValueError("n is not a perfect square; pass height and width explicitly")
        height, width = side, side
    if height * width != n:
        raise ShapeError("height * width must equal n")
    real_dtype = torch.float64 if dtype == torch.complex128 else torch.float32
    gen = torch.Generator().manual_seed(seed)
    sigma = math.sqrt(1.0 / (2.0 * m))
    re = torch.randn((m, n), generator=gen, dtype=real_dtype) * sigma
    im = torch.randn((m, n), generator=gen, dtype=real_dtype) * sigma
    return SensingOperator(torch.complex(re, im), m, n, seed, height, width)


def forward(op: SensingOperator, x: Union[ComplexImage, torch.Tensor]) -> torch.Tensor:
    """Intensity measurements y = |A x|^2.

    Accepts a single ComplexImage or a complex tensor of shape (..., n);
    returns a real tensor of shape (..., m).  Differentiable in x.
    """
    v = x.values if isinstance(x, ComplexImage) else x
    if v.shape[-1] != op.n:
        raise ShapeError(f"signal length {v.shape[-1]} != operator n {op.n}")
    mat = op.matrix.to(v.dtype)
    return torch.abs(v @ mat.mT) ** 2


def adjoint(op: SensingOperator, v: Union[torch.Tensor, Sequence]) -> ComplexImage:
    """A^H v, reshaped to the operator's image layout."""
    v = _as_tensor(v)
    if not v.is_complex():
        v = v.to(op.matrix.dtype)
    if v.shape != (op.m,):
        raise ShapeError(f"expected an m-vector of length {op.m}")
    out = op.matrix.conj().mT.to(v.dtype) @ v
    return ComplexImage(out, op.height, op.width)


def adjoint_batch(op: SensingOperator, v: torch.Tensor) -> torch.Tensor:
    """A^H applied to rows of v, returned as (..., n).  Differentiable."""
    if v.shape[-1] != op.m:
        raise ShapeError(f"expected last dimension {op.m}")
    return v @ op.matrix.conj().to(v.dtype)


def synthesize_phase_image(x0: Union[np.ndarray, torch.Tensor]) -> ComplexImage:
    """Phase-encode a real image: x = exp(i * x0), unit modulus per pixel."""
    t = _as_tensor(x0)
    if t.ndim != 2:
        raise ShapeError("expected a 2D real image")
    if not torch.isfinite(t).all():
        raise ValueError("image contains non-finite entries")
    h, w = t.shape
    values = torch.exp(1j * t.to(torch.float64)).reshape(-1)
    return ComplexImage(values, h, w)


def phase_encode_batch(x0: torch.Tensor, dtype: torch.dtype = torch.complex64) -> torch.Tensor:
    """exp(i * x0) over a stack of real images (N, H, W) -> complex (N, n)."""
    n = x0.shape[-1] * x0.shape[-2]
    real_dtype = torch.float64 if dtype == torch.complex128 else torch.float32
    return torch.exp(1j * x0.to(real_dtype)).reshape(x0.shape[0], n).to(dtype)


def make_dataset(
    images: Union[torch.Tensor, Sequence],
    op: SensingOperator,
    keep_truth: bool = True,
) -> MeasurementBatch:
    """Phase-encode a corpus and measure it through the operator.

    ``images`` is (N, H, W) real with values in [0, 1].  Truth signals are
    retained only when ``keep_truth`` is set.
    """
    imgs = _as_tensor(images)
    if imgs.ndim != 3 or imgs.shape[0] == 0:
        raise ValueError("expected a nonempty (N, H, W) image stack")
    if imgs.shape[1] != op.height or imgs.shape[2] != op.width:
        raise ShapeError("corpus shape does not match the operator layout")
    x = phase_encode_batch(imgs, dtype=op.matrix.dtype)
    y = forward(op, x)
    return MeasurementBatch(y, op.height, op.width, truths=x if keep_truth else None)


def cache_path(directory, m: int, n: int, seed: int) -> Path:
    return Path(directory) / f"op_m{m}_n{n}_s{seed}.npz"


def save_dataset(directory, op: SensingOperator, batch: MeasurementBatch) -> Path:
    """Archive operator matrix + measurements (+ truths) under the cache name."""
    path = cache_path(directory, op.m, op.n, op.seed)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = dict(
        matrix=op.matrix.numpy(),
        measurements=batch.measurements.numpy(),
        shape=np.array([op.height, op.width]),
        seed=np.array([op.seed]),
    )
    if batch.truths is not None:
        arrays["truths"] = batch.truths.numpy()
    np.savez(path, **arrays)
    return path


def load_dataset(path) -> tuple[SensingOperator, MeasurementBatch]:
    with np.load(path) as z:
        matrix = torch.from_numpy(z["matrix"])
        h, w = (int(v) for v in z["shape"])
        seed = int(z["seed"][0])
        measurements = torch.from_numpy(z["measurements"])
        truths = torch.from_numpy(z["truths"]) if "truths" in z else None
    m, n = matrix.shape
    op = SensingOperator(matrix, m, n, seed, h, w)
    return op, MeasurementBatch(measurements, h, w, truths=truths)
