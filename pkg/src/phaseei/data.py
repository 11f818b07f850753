"""Image corpora: MNIST IDX ingestion and a deterministic synthetic fallback.

The synthetic corpus draws a few Gaussian bumps plus a low-frequency random
field per image, min-max normalized to [0, 1].  Bump centers are uniform over
the torus, so the image distribution is exactly invariant to cyclic shifts.
"""

from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np


def read_idx(path) -> np.ndarray:
    """Parse a (possibly gzipped) IDX file into a numpy array."""
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        raw = fh.read()
    zero, dtype_code, ndim = struct.unpack(">HBB", raw[:4])
    if zero != 0:
        raise ValueError(f"{path}: bad IDX magic")
    dtypes = {0x08: np.uint8, 0x09: np.int8, 0x0B: np.int16,
              0x0C: np.int32, 0x0D: np.float32, 0x0E: np.float64}
    if dtype_code not in dtypes:
        raise ValueError(f"{path}: unknown IDX dtype 0x{dtype_code:02x}")
    dims = struct.unpack(">" + "I" * ndim, raw[4 : 4 + 4 * ndim])
    data = np.frombuffer(raw, dtype=np.dtype(dtypes[dtype_code]).newbyteorder(">"),
                         offset=4 + 4 * ndim)
    return data.reshape(dims).astype(dtypes[dtype_code])


def load_mnist_images(path) -> np.ndarray:
    """IDX image file -> float32 stack (N, 28, 28) scaled to [0, 1]."""
    arr = read_idx(path)
    if arr.ndim != 3:
        raise ValueError("expected a 3D IDX image file")
    return arr.astype(np.float32) / 255.0


def synthetic_corpus(count: int, height: int = 28, width: int = 28, seed: int = 0) -> np.ndarray:
    """Deterministic stack (count, height, width) of blob images in [0, 1]."""
    if count < 1:
        raise ValueError("count must be positive")
    rng = np.random.default_rng(seed)
    rows = np.arange(height)[:, None]
    cols = np.arange(width)[None, :]
    out = np.empty((count, height, width), dtype=np.float32)
    for i in range(count):
        img = np.zeros((height, width))
        for _ in range(rng.integers(2, 6)):
            cr, cc = rng.uniform(0, height), rng.uniform(0, width)
            s = rng.uniform(1.2, 3.5)
            a = rng.uniform(0.4, 1.0)
            # toroidal distance keeps the class shift-invariant
            dr = np.minimum(np.abs(rows - cr), height - np.abs(rows - cr))
            dc = np.minimum(np.abs(cols - cc), width - np.abs(cols - cc))
            img += a * np.exp(-(dr ** 2 + dc ** 2) / (2 * s ** 2))
        low = rng.normal(size=(4, 4))
        field = np.kron(low, np.ones((height // 4 + 1, width // 4 + 1)))[:height, :width]
        img += 0.15 * field
        img -= img.min()
        peak = img.max()
        if peak > 0:
            img /= peak
        out[i] = img
    return out


def load_corpus(kind: str, count: int, height: int, width: int, seed: int,
                mnist_path=None) -> np.ndarray:
    if kind == "synthetic":
        return synthetic_corpus(count, height, width, seed)
    if kind == "mnist":
        if mnist_path is None:
            raise ValueError("mnist corpus requires --mnist-path (IDX image file)")
        imgs = load_mnist_images(mnist_path)
        if count > len(imgs):
            raise ValueError(f"requested {count} images, file holds {len(imgs)}")
        rng = np.random.default_rng(seed)
        idx = rng.choice(len(imgs), size=count, replace=False)
        return imgs[idx]
    raise ValueError(f"unknown corpus kind {kind!r}")
