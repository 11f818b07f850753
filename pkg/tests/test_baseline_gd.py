import numpy as np
import pytest
import torch

from phaseei.baseline_gd import GdConfig, objective_value, solve
from phaseei.metrics import cosine_similarity
from phaseei.reconstructor import backproject
from phaseei.sensing import SensingOperator, forward, make_operator
from conftest import assert_grad_matches, random_signal


@pytest.fixture
def problem():
    op = make_operator(64, 16, seed=21, height=4, width=4, dtype=torch.complex128)
    x = random_signal(16, np.random.default_rng(2), unit_modulus=True)
    return op, x, forward(op, x)


class TestGdConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            GdConfig(steps=0)
        with pytest.raises(ValueError):
            GdConfig(restarts=0)
        with pytest.raises(ValueError):
            GdConfig(step_size=0)
        with pytest.raises(ValueError):
            GdConfig(init="spectral")


class TestSolve:
    def test_starts_at_global_minimum_stays_there(self, problem):
        op, x, y = problem
        cfg = GdConfig(steps=50, step_size=0.1, restarts=1, seed=0)
        xh, obj = solve(y, op, cfg, x0=x)
        assert obj < 1e-20
        assert float(cosine_similarity(x, xh.values)) == pytest.approx(1.0, abs=1e-10)

    def test_returned_objective_not_above_init(self, problem):
        op, x, y = problem
        cfg = GdConfig(steps=200, step_size=0.2, restarts=3, seed=1)
        x0 = backproject(y, op).values
        init_obj = float(objective_value(x0.unsqueeze(0), y, op, "amplitude")[0])
        _, obj = solve(y, op, cfg)
        assert np.isfinite(obj)
        assert obj <= init_obj

    def test_phase_orbit_degeneracy(self, problem):
        op, x, y = problem
        cfg = GdConfig(steps=300, step_size=0.2, restarts=1, seed=0)
        x0 = backproject(y, op).values
        a, _ = solve(y, op, cfg, x0=x0)
        b, _ = solve(y, op, cfg, x0=np.exp(1j * 0.9) * x0)
        assert float(cosine_similarity(a.values, b.values)) > 1 - 1e-6

    def test_shape_mismatch(self, problem):
        op, _, _ = problem
        with pytest.raises(Exception):
            solve(torch.rand(5), op, GdConfig(steps=1))

    def test_intensity_objective_selectable(self, problem):
        op, x, y = problem
        cfg = GdConfig(steps=50, step_size=0.05, restarts=1, seed=0, objective="intensity")
        xh, obj = solve(y, op, cfg, x0=x)
        assert obj < 1e-18

    def test_oversampled_recovery(self, problem):
        # alpha = 4: descent with restarts should solve the instance
        op, x, y = problem
        xh, _ = solve(y, op, GdConfig())
        assert float(cosine_similarity(x, xh.values)) > 0.95


class TestObjectiveGradient:
    def test_amplitude_gradient_matches_finite_differences(self, problem):
        op, x, y = problem

        def fn(u):
            z = torch.complex(u[0], u[1])
            return objective_value(z.unsqueeze(0), y, op, "amplitude")[0]

        rng = np.random.default_rng(7)
        u0 = torch.from_numpy(rng.normal(size=(2, 16)))
        assert_grad_matches(fn, u0)

    def test_intensity_gradient_matches_finite_differences(self, problem):
        op, x, y = problem

        def fn(u):
            z = torch.complex(u[0], u[1])
            return objective_value(z.unsqueeze(0), y, op, "intensity")[0]

        rng = np.random.default_rng(8)
        u0 = torch.from_numpy(rng.normal(size=(2, 16)))
        assert_grad_matches(fn, u0)
