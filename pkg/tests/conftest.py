import numpy as np
import pytest
import torch

from phaseei.sensing import SensingOperator, make_operator


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_op():
    # 4x4 grid, alpha = 2, double precision for property checks
    return make_operator(32, 16, seed=3, height=4, width=4, dtype=torch.complex128)


@pytest.fixture
def identity_op():
    # m = n identity sensing matrix on a 2x2 grid
    return SensingOperator(torch.eye(4, dtype=torch.complex128), 4, 4, 0, 2, 2)


def random_signal(n, rng, unit_modulus=False):
    if unit_modulus:
        return torch.from_numpy(np.exp(1j * rng.uniform(0, 2 * np.pi, n)))
    z = rng.normal(size=n) + 1j * rng.normal(size=n)
    return torch.from_numpy(z)


def central_difference(fn, u, eps=1e-6):
    """Central finite differences of scalar fn over a real tensor u."""
    g = torch.zeros_like(u)
    flat = u.reshape(-1)
    gflat = g.reshape(-1)
    for k in range(flat.numel()):
        orig = float(flat[k])
        flat[k] = orig + eps
        fp = float(fn(u).detach())
        flat[k] = orig - eps
        fm = float(fn(u).detach())
        flat[k] = orig
        gflat[k] = (fp - fm) / (2 * eps)
    return g


def assert_grad_matches(fn, u0, rtol=1e-4, eps=1e-6):
    """Autograd vs central differences on a real leaf tensor, 64-bit."""
    u = u0.detach().clone().double().requires_grad_(True)
    fn(u).backward()
    auto = u.grad.detach().clone()
    numeric = central_difference(fn, u.detach().clone(), eps=eps)
    scale = numeric.abs().max().clamp_min(1e-8)
    assert float((auto - numeric).abs().max() / scale) < rtol
