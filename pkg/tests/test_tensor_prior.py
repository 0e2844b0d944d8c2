"""Tests for tensor random densities f = 1 + Σ U_n g_n(x) h_n(y)"""

import numpy as np
import pytest

from core.basis import BasisPair, StepFunction, haar_basis, sign_step
from core.tensor_prior import (
    CoeffLaw,
    TensorDensity,
    TensorPrior,
    char_function,
    empirical_char_function,
    sample_density,
)
from models.grid import Grid1D, Rectangle
from utils.error_handling import InvalidMeasureError, InvalidParameterError

HALF = Grid1D.uniform(2)
T_VALUES = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0]


class TestBasis:
    def test_sign_step_single_term(self):
        f = TensorDensity((BasisPair(sign_step(), sign_step()),), [1.0], HALF, HALF)
        assert f.rectangle_prob(Rectangle.corner(0.5, 0.5)) == pytest.approx(0.5, abs=1e-12)
        assert f.density(0.25, 0.75) == pytest.approx(0.0)

    def test_haar_pairs_are_centered(self, skewed):
        for pair in haar_basis(skewed, skewed, 3):
            pair.validate(skewed, skewed)

    def test_uncentered_basis_rejected(self):
        ones = StepFunction(np.array([0.0, 1.0]), np.array([1.0]))
        with pytest.raises(InvalidMeasureError):
            BasisPair(ones, sign_step()).validate(HALF, HALF)

    def test_coefficient_sum_above_one(self):
        pair = BasisPair(sign_step(), sign_step())
        with pytest.raises(InvalidMeasureError):
            TensorDensity((pair, pair), [0.7, 0.7], HALF, HALF)


class TestCharacteristicFunction:
    def test_at_zero(self, lebesgue):
        prior = TensorPrior.haar(4, lebesgue, lebesgue)
        assert prior.char_function(Rectangle.corner(0.3, 0.7), 0.0) == pytest.approx(1.0)

    def test_zero_law_is_a_pure_phase(self, lebesgue):
        prior = TensorPrior.haar(4, lebesgue, lebesgue, v_law="zero")
        rect = Rectangle.corner(0.3, 0.7)
        for t in T_VALUES:
            assert prior.char_function(rect, t) == pytest.approx(np.exp(1j * 0.21 * t))

    @pytest.mark.parametrize("v_law", ["uniform", "rademacher"])
    def test_matches_monte_carlo(self, lebesgue, v_law):
        prior = TensorPrior.haar(4, lebesgue, lebesgue, v_law=v_law)
        rect = Rectangle(0.1, 0.6, 0.2, 0.45)
        analytic = prior.char_function(rect, np.array(T_VALUES))
        values, se_real, se_imag = empirical_char_function(
            prior.law, prior.basis, rect, T_VALUES, lebesgue, lebesgue, 100_000, seed=7
        )
        assert np.all(np.abs(values.real - analytic.real) <= 3 * se_real + 1e-12)
        assert np.all(np.abs(values.imag - analytic.imag) <= 3 * se_imag + 1e-12)

    def test_common_coefficient_rejected(self, lebesgue):
        law = CoeffLaw.geometric(3, common=True)
        basis = haar_basis(lebesgue, lebesgue, 3)
        with pytest.raises(InvalidParameterError):
            char_function(law, basis, Rectangle.corner(0.5, 0.5), 1.0, lebesgue, lebesgue)

    def test_unknown_v_law(self):
        with pytest.raises(InvalidParameterError):
            CoeffLaw.geometric(3, v_law="cauchy")


class TestRandomDensities:
    def test_draws_are_members(self, lebesgue, rng):
        prior = TensorPrior.haar(6, lebesgue, lebesgue)
        for _ in range(5):
            assert prior.sample(rng).is_member(points=128)

    def test_exchangeable_when_marginals_agree(self, skewed, rng):
        f = TensorPrior.haar(3, skewed, skewed).sample(rng)
        left = f.rectangle_prob(Rectangle(0.1, 0.4, 0.3, 0.9))
        right = f.rectangle_prob(Rectangle(0.3, 0.9, 0.1, 0.4))
        assert left == pytest.approx(right, abs=1e-12)

    def test_marginals_under_skewed_measures(self, skewed, rng):
        f = TensorPrior.haar(3, skewed, skewed).sample(rng)
        assert f.rectangle_prob(Rectangle(0.0, 0.5, 0.0, 1.0)) == pytest.approx(0.3, abs=1e-12)

    def test_sample_density_reproducible(self, lebesgue):
        law = CoeffLaw.geometric(4)
        basis = haar_basis(lebesgue, lebesgue, 4)
        a = sample_density(law, basis, seed=11, mu=lebesgue, nu=lebesgue)
        b = sample_density(law, basis, seed=11, mu=lebesgue, nu=lebesgue)
        assert np.array_equal(a.coeffs, b.coeffs)

    def test_sample_points_stay_in_square(self, lebesgue, rng):
        f = TensorPrior.haar(4, lebesgue, lebesgue).sample(rng)
        x, y = f.sample_points(500, rng)
        assert x.shape == y.shape == (500,)
        assert np.all((x >= 0) & (x <= 1) & (y >= 0) & (y <= 1))

    def test_mean_rectangle_prob(self, skewed):
        prior = TensorPrior.haar(3, skewed, skewed)
        assert prior.mean_rectangle_prob(Rectangle.corner(0.5, 0.5)) == pytest.approx(0.09)
