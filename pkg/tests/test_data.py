import gzip
import struct

import numpy as np
import pytest

from phaseei.data import load_corpus, load_mnist_images, read_idx, synthetic_corpus


def write_idx3(path, arr):
    with open(path, "wb") as fh:
        fh.write(struct.pack(">HBB", 0, 0x08, 3))
        fh.write(struct.pack(">III", *arr.shape))
        fh.write(arr.astype(np.uint8).tobytes())


class TestIdx:
    def test_roundtrip(self, tmp_path):
        arr = np.arange(2 * 4 * 3, dtype=np.uint8).reshape(2, 4, 3)
        path = tmp_path / "imgs.idx3-ubyte"
        write_idx3(path, arr)
        out = read_idx(path)
        assert np.array_equal(out, arr)

    def test_gzip_supported(self, tmp_path):
        arr = np.arange(12, dtype=np.uint8).reshape(1, 4, 3)
        path = tmp_path / "imgs.idx3-ubyte"
        write_idx3(path, arr)
        gz = tmp_path / "imgs.idx3-ubyte.gz"
        with open(path, "rb") as src, gzip.open(gz, "wb") as dst:
            dst.write(src.read())
        assert np.array_equal(read_idx(gz), arr)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad"
        path.write_bytes(b"\x01\x02\x08\x03" + b"\x00" * 16)
        with pytest.raises(ValueError):
            read_idx(path)

    def test_mnist_scaling(self, tmp_path):
        arr = np.full((2, 28, 28), 255, dtype=np.uint8)
        path = tmp_path / "imgs"
        write_idx3(path, arr)
        imgs = load_mnist_images(path)
        assert imgs.dtype == np.float32
        assert imgs.max() == 1.0


class TestSyntheticCorpus:
    def test_shape_and_range(self):
        imgs = synthetic_corpus(5, 28, 28, seed=0)
        assert imgs.shape == (5, 28, 28)
        assert imgs.min() >= 0 and imgs.max() <= 1

    def test_deterministic(self):
        a = synthetic_corpus(3, 16, 16, seed=4)
        b = synthetic_corpus(3, 16, 16, seed=4)
        assert np.array_equal(a, b)

    def test_seeds_differ(self):
        a = synthetic_corpus(3, 16, 16, seed=4)
        b = synthetic_corpus(3, 16, 16, seed=5)
        assert not np.array_equal(a, b)

    def test_count_validation(self):
        with pytest.raises(ValueError):
            synthetic_corpus(0)


class TestLoadCorpus:
    def test_synthetic(self):
        imgs = load_corpus("synthetic", 4, 8, 8, seed=1)
        assert imgs.shape == (4, 8, 8)

    def test_mnist_requires_path(self):
        with pytest.raises(ValueError):
            load_corpus("mnist", 4, 28, 28, seed=1)

    def test_mnist_subsample(self, tmp_path):
        arr = (np.random.default_rng(0).uniform(0, 255, (10, 28, 28))).astype(np.uint8)
        path = tmp_path / "imgs"
        write_idx3(path, arr)
        imgs = load_corpus("mnist", 4, 28, 28, seed=1, mnist_path=path)
        assert imgs.shape == (4, 28, 28)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            load_corpus("imagenet", 1, 8, 8, seed=0)
