"""Tests for Brownian random densities"""

import numpy as np
import pytest

from core.brownian import MIN_STEPS, BrownianPrior, brownian_density, resolve_phi
from models.grid import Rectangle
from utils.error_handling import InvalidParameterError

N_STEPS = 10_000


class TestRectangleIdentity:
    @pytest.mark.parametrize("phi", ["half_sine", "half_tanh", "positive_indicator", "logistic"])
    def test_identity_holds_on_fine_paths(self, phi, rng):
        density = brownian_density(phi, N_STEPS, rng=rng)
        for a, b in rng.random((5, 2)):
            prob, closed_form = density.identity_terms(a, b)
            assert abs(prob - closed_form) <= 10.0 / N_STEPS

    def test_constant_phi_gives_independence(self, rng):
        density = brownian_density("constant", MIN_STEPS, rng=rng)
        assert density.density(np.array([0.1, 0.7]), np.array([0.9, 0.2])) == pytest.approx([1.0, 1.0])
        assert density.rectangle_prob(Rectangle.corner(0.3, 0.6)) == pytest.approx(0.18)

    def test_uniform_marginals(self, rng):
        density = brownian_density("half_sine", MIN_STEPS, rng=rng)
        for b in (0.2, 0.5, 0.9):
            assert density.rectangle_prob(Rectangle.corner(1.0, b)) == pytest.approx(b, abs=1e-9)

    def test_non_negative(self, rng):
        density = brownian_density("half_sine", MIN_STEPS, rng=rng)
        grid = np.linspace(0.0, 1.0, 101)
        gx, gy = np.meshgrid(grid, grid)
        assert np.min(density.density(gx, gy)) >= -1e-12

    def test_identity_rows(self, rng):
        density = BrownianPrior("half_tanh", MIN_STEPS).sample(rng)
        rows = density.identity_rows([(0.25, 0.75)])
        assert rows[0]["residual"] == pytest.approx(rows[0]["P_f"] - rows[0]["closed_form"])


class TestValidation:
    def test_too_few_steps(self):
        with pytest.raises(InvalidParameterError):
            brownian_density("half_sine", MIN_STEPS - 1, seed=1)

    def test_unknown_phi(self):
        with pytest.raises(InvalidParameterError):
            resolve_phi("cubic")

    def test_out_of_range_phi(self):
        with pytest.raises(InvalidParameterError):
            resolve_phi(np.sin)

    def test_prior_rejects_bad_phi(self):
        with pytest.raises(InvalidParameterError):
            BrownianPrior("nope")

    def test_seed_reproducible(self):
        first = brownian_density("half_sine", MIN_STEPS, seed=3)
        second = brownian_density("half_sine", MIN_STEPS, seed=3)
        assert np.array_equal(first.path1, second.path1)
