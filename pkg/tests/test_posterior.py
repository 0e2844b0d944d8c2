"""Tests for exact and importance-sampling posteriors"""

import numpy as np
import pytest

from config.settings import update_setting
from core.checkerboard_prior import CheckerboardMixture, CheckerboardPrior
from core.posterior import (
    MIN_PARTICLES,
    count_expansion,
    cover_sets,
    exact_checkerboard_posterior,
    exchangeability_diagnostic,
    is_posterior,
    predictive,
    sample_exchangeable,
)
from core.tensor_prior import TensorPrior
from models.grid import Grid1D, Rectangle
from models.observation import Observation, from_arrays
from utils.error_handling import InvalidParameterError, ZeroEvidenceError

IDENTITY_2 = (0, 1)
SWAP_2 = (1, 0)


@pytest.fixture
def two_perm_prior():
    return CheckerboardPrior(2, (IDENTITY_2, SWAP_2), [1.0, 1.0])


@pytest.fixture
def diagonal_data():
    """Two points, both on the support of the identity only"""
    return [Observation(0.1, 0.2), Observation(0.6, 0.9)]


class TestExactPosterior:
    def test_no_data_is_the_prior(self, two_perm_prior):
        post = exact_checkerboard_posterior(two_perm_prior, [])
        assert post.n_components == 1
        assert post.alphas[0].tolist() == [1.0, 1.0]
        assert post.evidence == pytest.approx(1.0)

    def test_conjugate_update(self, two_perm_prior, diagonal_data):
        post = exact_checkerboard_posterior(two_perm_prior, diagonal_data)
        assert post.n_components == 1
        assert post.alphas[0].tolist() == [3.0, 1.0]
        assert post.mean_weights() == pytest.approx([0.75, 0.25])
        # 4 E[U_1^2] under Dir(1, 1)
        assert post.evidence == pytest.approx(4.0 / 3.0)

    def test_multinomial_multiplicities(self):
        expansion = count_expansion([(0, 1), (0, 1)], 2)
        assert expansion == {(2, 0): 1, (1, 1): 2, (0, 2): 1}

    def test_overlapping_supports(self):
        k3 = CheckerboardPrior(3, ((0, 1, 2), (0, 2, 1)), [1.0, 1.0])
        data = [Observation(0.1, 0.1), Observation(0.5, 0.5)]
        assert cover_sets(k3, data) == [(0, 1), (0,)]
        post = exact_checkerboard_posterior(k3, data)
        assert post.n_components == 2
        assert post.weights.sum() == pytest.approx(1.0)
        # (U_1 + U_2) U_1 = U_1 under the simplex constraint: Dir(2, 1), evidence 9 E[U_1]
        assert post.mean_weights()[0] == pytest.approx(2.0 / 3.0)
        assert post.evidence == pytest.approx(4.5)

    def test_consistency(self):
        rng = np.random.default_rng(2024)
        truth = CheckerboardMixture(3, ((0, 1, 2),), [1.0])
        data = from_arrays(*truth.sample_points(200, rng))
        prior = CheckerboardPrior(3, ((0, 1, 2), (1, 0, 2), (0, 2, 1)), [1.0, 1.0, 1.0])
        post = exact_checkerboard_posterior(prior, data)
        assert post.marginal_sf(0, 0.9) > 0.95

    def test_zero_evidence(self):
        prior = CheckerboardPrior(2, (IDENTITY_2,), [1.0])
        with pytest.raises(ZeroEvidenceError):
            exact_checkerboard_posterior(prior, [Observation(0.1, 0.9)])

    def test_component_limit(self, two_perm_prior):
        with pytest.raises(InvalidParameterError):
            count_expansion([(0, 1)] * 20, 2, max_components=5)

    def test_rectangle_moments_of_the_prior(self, two_perm_prior):
        post = exact_checkerboard_posterior(two_perm_prior, [])
        mean, var = post.rectangle_moments(Rectangle.corner(0.5, 0.5))
        assert mean == pytest.approx(0.25)
        assert var == pytest.approx(1.0 / 48.0)

    def test_single_permutation_sf(self):
        post = exact_checkerboard_posterior(CheckerboardPrior(2, (IDENTITY_2,), [1.0]), [Observation(0.1, 0.1)])
        assert post.marginal_sf(0, 0.5) == 1.0

    def test_posterior_draws(self, two_perm_prior, diagonal_data, rng):
        post = exact_checkerboard_posterior(two_perm_prior, diagonal_data)
        draws = post.sample(rng, 5000)
        assert draws.shape == (5000, 2)
        assert draws.sum(axis=1) == pytest.approx(np.ones(5000))
        assert draws[:, 0].mean() == pytest.approx(0.75, abs=0.02)


class TestImportanceSampling:
    def test_matches_exact(self, two_perm_prior, diagonal_data):
        exact = exact_checkerboard_posterior(two_perm_prior, diagonal_data)
        weighted = is_posterior(two_perm_prior, None, diagonal_data, 10_000, seed=17)
        mean, se = weighted.expectation_of(np.stack([p.weights for p in weighted.particles]))
        assert np.all(np.abs(mean - exact.mean_weights()) <= 3 * se)
        assert abs(weighted.evidence - exact.evidence) <= 3 * weighted.evidence_se

    def test_predictive_matches_exact(self, two_perm_prior, diagonal_data):
        exact = exact_checkerboard_posterior(two_perm_prior, diagonal_data)
        weighted = is_posterior(two_perm_prior, None, diagonal_data, 10_000, seed=18)
        rect = Rectangle.corner(0.5, 0.5)
        mean, se = weighted.rectangle_expectation(rect)
        assert abs(mean - exact.rectangle_moments(rect)[0]) <= 3 * se

    def test_workers_do_not_change_the_result(self, two_perm_prior, diagonal_data):
        update_setting("CHUNK_SIZE", 500)
        one = is_posterior(two_perm_prior, None, diagonal_data, 3000, seed=5, workers=1)
        four = is_posterior(two_perm_prior, None, diagonal_data, 3000, seed=5, workers=4)
        assert np.array_equal(one.weights, four.weights)

    def test_tensor_prior(self, diagonal_data):
        prior = TensorPrior.haar(3, Grid1D.uniform(16), Grid1D.uniform(16))
        post = is_posterior(prior, None, diagonal_data, MIN_PARTICLES, seed=3)
        assert post.n_particles == MIN_PARTICLES
        assert 0.0 < post.ess <= MIN_PARTICLES
        assert predictive(post, Rectangle.full()) == pytest.approx(1.0)

    def test_too_few_particles(self, two_perm_prior):
        with pytest.raises(InvalidParameterError):
            is_posterior(two_perm_prior, None, [], MIN_PARTICLES - 1, seed=1)

    def test_zero_evidence(self):
        prior = CheckerboardPrior(2, (IDENTITY_2,), [1.0])
        with pytest.raises(ZeroEvidenceError):
            is_posterior(prior, None, [Observation(0.1, 0.9)], MIN_PARTICLES, seed=1)


class TestPredictive:
    def test_full_square(self, two_perm_prior, diagonal_data):
        post = exact_checkerboard_posterior(two_perm_prior, diagonal_data)
        assert predictive(post, Rectangle.full()) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("a", [0.0, 0.3, 0.5, 0.8])
    def test_strip(self, two_perm_prior, diagonal_data, a):
        post = exact_checkerboard_posterior(two_perm_prior, diagonal_data)
        assert predictive(post, Rectangle(0.0, a, 0.0, 1.0)) == pytest.approx(a, abs=1e-12)

    def test_quadrant(self, two_perm_prior, diagonal_data):
        post = exact_checkerboard_posterior(two_perm_prior, diagonal_data)
        assert predictive(post, Rectangle.corner(0.5, 0.5)) == pytest.approx(0.375, abs=1e-12)


class TestExchangeableData:
    def test_zero_points(self, two_perm_prior):
        draw, data = sample_exchangeable(two_perm_prior, 0, seed=1)
        assert data == []
        assert isinstance(draw, CheckerboardMixture)

    def test_reproducible(self, two_perm_prior):
        _, first = sample_exchangeable(two_perm_prior, 10, seed=8)
        _, second = sample_exchangeable(two_perm_prior, 10, seed=8)
        assert first == second

    def test_negative_n(self, two_perm_prior):
        with pytest.raises(InvalidParameterError):
            sample_exchangeable(two_perm_prior, -1, seed=1)


class _OrderedDraw:
    """Points in a fixed order: Z_1 lower left, Z_2 upper right, Z_3 lower left"""

    def sample_points(self, n, rng):
        x = np.array([0.1, 0.9, 0.2])[:n]
        return x, x.copy()


class _OrderedSampler:
    def sample(self, rng):
        return _OrderedDraw()


class TestExchangeabilityDiagnostic:
    def test_checkerboard_prior_passes(self):
        result = exchangeability_diagnostic(CheckerboardPrior.full(3), 2000, seed=13)
        assert result["passed"]
        assert result["pvalue"] >= 1e-3
        assert result["df"] > 0

    def test_tensor_prior_passes(self):
        result = exchangeability_diagnostic(TensorPrior.haar(4), 2000, seed=14)
        assert result["passed"]

    def test_ordered_points_fail(self):
        result = exchangeability_diagnostic(_OrderedSampler(), 300, seed=1)
        # All 300 triples land on one of the three orderings of {ll, ll, ur}
        assert result["statistic"] == pytest.approx(600.0)
        assert result["df"] == 2
        assert not result["passed"]

    def test_single_cell_is_trivially_exchangeable(self, two_perm_prior):
        result = exchangeability_diagnostic(two_perm_prior, 50, seed=2, cells=1)
        assert result == {"statistic": 0.0, "pvalue": 1.0, "df": 0, "n_rep": 50, "passed": True}

    def test_independent_of_workers(self, two_perm_prior):
        update_setting("CHUNK_SIZE", 100)
        serial = exchangeability_diagnostic(two_perm_prior, 500, seed=3, workers=1)
        threaded = exchangeability_diagnostic(two_perm_prior, 500, seed=3, workers=4)
        assert serial == threaded

    def test_needs_replications(self, two_perm_prior):
        with pytest.raises(InvalidParameterError):
            exchangeability_diagnostic(two_perm_prior, 0, seed=1)
