"""Tests for checkerboard mixtures, their matrix form and coupling projection"""

import math

import numpy as np
import pytest

from core.checkerboard_prior import (
    CheckerboardDensity,
    CheckerboardMixture,
    CheckerboardPrior,
    KLaw,
    RandomResolutionPrior,
    all_permutations,
    approximation_bound,
    approximation_sweep,
    comonotone_coupling,
    integer_grid_prob,
    project_coupling,
    random_coupling,
    rectangle_prob,
    sample_mixture,
    to_matrix,
)
from core.measures import bl_distance_refined
from models.grid import Grid2D, Rectangle
from utils.error_handling import InvalidMeasureError, InvalidParameterError

IDENTITY_2 = (0, 1)
SWAP_2 = (1, 0)


class TestRectangleProbability:
    @pytest.mark.parametrize("a,b", [(0.3, 0.8), (1.0, 0.25), (0.0, 0.5)])
    def test_single_cell_is_product(self, a, b):
        mix = CheckerboardMixture(1, ((0,),), [1.0])
        assert rectangle_prob(mix, a, b) == pytest.approx(a * b, abs=1e-15)

    def test_identity_half_square(self):
        mix = CheckerboardMixture(2, (IDENTITY_2,), [1.0])
        assert rectangle_prob(mix, 0.5, 0.5) == 0.5

    def test_swap_half_square(self):
        mix = CheckerboardMixture(2, (SWAP_2,), [1.0])
        assert rectangle_prob(mix, 0.5, 0.5) == 0.0

    def test_integer_grid_formula(self, rng):
        k = 4
        perms = [tuple(rng.permutation(k)) for _ in range(3)]
        perms = list(dict.fromkeys(perms))
        weights = rng.dirichlet(np.ones(len(perms)))
        mix = CheckerboardMixture(k, tuple(perms), weights / weights.sum())
        for ka in range(k + 1):
            for kb in range(k + 1):
                assert rectangle_prob(mix, ka / k, kb / k) == pytest.approx(
                    integer_grid_prob(mix, ka / k, kb / k), abs=1e-15
                )

    def test_uniform_marginals_are_exact(self, rng):
        prior = CheckerboardPrior.full(3, 0.7)
        mix = prior.sample(rng)
        for t in (0.1, 1 / 3, 0.5, 0.9):
            assert rectangle_prob(mix, t, 1.0) == pytest.approx(t, abs=1e-15)
            assert rectangle_prob(mix, 1.0, t) == pytest.approx(t, abs=1e-15)

    def test_corner_outside_square(self):
        mix = CheckerboardMixture(2, (IDENTITY_2,), [1.0])
        with pytest.raises(InvalidParameterError):
            rectangle_prob(mix, 1.5, 0.5)

    def test_general_rectangle(self):
        mix = CheckerboardMixture(2, (IDENTITY_2, SWAP_2), [0.25, 0.75])
        assert mix.rectangle_prob(Rectangle(0.0, 0.5, 0.5, 1.0)) == pytest.approx(0.375, abs=1e-15)


class TestMatrixForm:
    def test_all_permutations_give_ones(self):
        k = 3
        perms = all_permutations(k)
        mix = CheckerboardMixture(k, tuple(perms), np.full(len(perms), 1.0 / len(perms)))
        assert to_matrix(mix).d == pytest.approx(np.ones((k, k)))

    def test_half_half_two_by_two(self):
        mix = CheckerboardMixture(2, (IDENTITY_2, SWAP_2), [0.5, 0.5])
        assert to_matrix(mix).d.tolist() == [[1.0, 1.0], [1.0, 1.0]]

    def test_membership(self):
        mix = CheckerboardMixture(2, (IDENTITY_2, SWAP_2), [0.5, 0.5])
        inside = mix.membership(np.array([0.1, 0.1]), np.array([0.2, 0.8]))
        assert inside.tolist() == [[True, False], [False, True]]

    def test_density_matches_matrix(self):
        mix = CheckerboardMixture(2, (IDENTITY_2, SWAP_2), [0.25, 0.75])
        assert mix.density(0.1, 0.1) == pytest.approx(0.5)
        assert mix.density(0.1, 0.9) == pytest.approx(1.5)

    def test_rejects_repeated_permutations(self):
        with pytest.raises(InvalidMeasureError):
            CheckerboardMixture(2, (IDENTITY_2, IDENTITY_2), [0.5, 0.5])

    def test_rejects_weights_off_simplex(self):
        with pytest.raises(InvalidMeasureError):
            CheckerboardMixture(2, (IDENTITY_2, SWAP_2), [0.5, 0.6])

    def test_rejects_non_doubly_stochastic(self):
        with pytest.raises(InvalidMeasureError):
            CheckerboardDensity([[2.0, 0.0], [1.0, 1.0]])

    def test_sample_points_marginals(self, rng):
        mix = CheckerboardMixture(2, (IDENTITY_2, SWAP_2), [0.9, 0.1])
        x, y = mix.sample_points(20_000, rng)
        same_half = np.mean((x < 0.5) == (y < 0.5))
        assert same_half == pytest.approx(0.9, abs=0.02)
        assert np.mean(x < 0.5) == pytest.approx(0.5, abs=0.02)


class TestProjection:
    def test_comonotone_projection(self):
        g = project_coupling(comonotone_coupling(16), 4)
        assert g.d == pytest.approx(4 * np.eye(4), abs=1e-9)

    def test_comonotone_distance_within_bound(self):
        p = comonotone_coupling(16)
        distance = bl_distance_refined(p, project_coupling(p, 4).to_grid(4))
        assert distance <= approximation_bound(4) + 1e-9
        assert approximation_bound(4) == pytest.approx(0.70710678, abs=1e-8)

    def test_fixed_point(self):
        g = CheckerboardDensity([[1.5, 0.5], [0.5, 1.5]])
        again = project_coupling(g.to_grid(2), 2)
        assert again.d == pytest.approx(g.d, abs=1e-12)

    def test_non_uniform_marginals(self):
        with pytest.raises(InvalidMeasureError):
            project_coupling(Grid2D([[0.4, 0.2], [0.2, 0.2]]), 2)

    def test_sweep_respects_bound(self, rng):
        rows = approximation_sweep(random_coupling(16, rng), [2, 4, 8, 16])
        for row in rows:
            assert row["d_bl"] <= row["bound"] + 1e-9
        assert rows[-1]["d_bl"] == pytest.approx(0.0, abs=1e-7)

    def test_sweep_keeps_order_across_workers(self, rng):
        p = random_coupling(12, rng)
        serial = approximation_sweep(p, [6, 2, 4], workers=1)
        threaded = approximation_sweep(p, [6, 2, 4], workers=3)
        assert [row["k"] for row in threaded] == [6, 2, 4]
        assert serial == threaded

    def test_cdf_grid_corners(self):
        g = CheckerboardDensity(2 * np.eye(2))
        cdf = g.cdf_grid()
        assert cdf[-1].tolist() == pytest.approx([0.0, 0.5, 1.0])
        assert cdf[1, 1] == pytest.approx(0.5)


class TestDirichletWeights:
    def test_symmetric_mean(self):
        rng = np.random.default_rng(99)
        draws = np.array([sample_mixture([IDENTITY_2, SWAP_2], [1.0, 1.0], rng=rng).weights[0]
                          for _ in range(100_000)])
        se = draws.std(ddof=1) / math.sqrt(draws.size)
        assert abs(draws.mean() - 0.5) <= 3 * se

    def test_single_permutation(self):
        mix = sample_mixture([(2, 0, 1)], [3.0], seed=5)
        assert mix.weights.tolist() == [1.0]

    @pytest.mark.parametrize("alpha", [0.0, -1.0])
    def test_non_positive_alpha(self, alpha):
        with pytest.raises(InvalidParameterError):
            sample_mixture([IDENTITY_2, SWAP_2], [1.0, alpha], seed=1)

    def test_reproducible(self):
        first = sample_mixture(None, [0.5], seed=42, k=3)
        second = sample_mixture(None, [0.5], seed=42, k=3)
        assert np.array_equal(first.weights, second.weights)
        assert first.m == 6

    def test_alpha_count_must_match(self):
        with pytest.raises(InvalidParameterError):
            sample_mixture([IDENTITY_2, SWAP_2], [1.0, 1.0, 1.0], seed=1)

    def test_random_resolution(self, rng):
        prior = RandomResolutionPrior(KLaw(k_max=4, p=0.5), alpha=1.0)
        for _ in range(10):
            mix = prior.sample(rng)
            assert 1 <= mix.k <= 4
            assert mix.m == math.factorial(mix.k)

    def test_k_law_rejects_fixed_permutations(self):
        with pytest.raises(InvalidParameterError):
            sample_mixture([IDENTITY_2, SWAP_2], [1.0], seed=1, k_law=KLaw(k_max=3))

    def test_k_law_rejects_asymmetric_alphas(self):
        with pytest.raises(InvalidParameterError):
            sample_mixture(None, [1.0, 2.0, 1.0], seed=1, k_law=KLaw(k_max=3))

    def test_k_law_with_a_permutation_count(self):
        mix = sample_mixture(None, [0.5, 0.5, 0.5], seed=3, k_law=KLaw(k_max=1))
        assert mix.k == 1
        assert mix.m == 1

    def test_k_law_probabilities(self):
        probs = KLaw(k_max=3, p=0.5).probabilities()
        assert probs == pytest.approx(np.array([4, 2, 1]) / 7)

    def test_too_many_permutations(self):
        with pytest.raises(InvalidParameterError):
            all_permutations(10)
