"""Tests for stick-breaking, copulas and the priors on Γ(μ)"""

import math
import tracemalloc

import numpy as np
import pytest
from scipy.stats import beta as beta_law
from scipy.stats import kstwo

from core.checkerboard_prior import CheckerboardDensity, CheckerboardPrior
from core.copulas import (
    CheckerboardCopulaPrior,
    FiniteCopulaMixture,
    GridCopula,
    ProductCopula,
    copula_from_dict,
    section_inverse,
)
from core.gamma_mu import (
    ComposedCdf,
    ProductDPPrior,
    SectionPartition,
    beta_law_ks,
    composed_cdf_law,
    composed_cdf_posterior,
    dirichlet_moments,
    fdd_moments,
    forward_predictive_check,
    posterior_fdd,
    product_prior_fdd,
    product_prior_predictive,
    random_copula_law,
    simulate_composed_cdf,
)
from core.measures import cdf
from core.stick_breaking import (
    PosteriorBaseMeasure,
    dp_monte_carlo,
    dp_stick_breaking,
    posterior_parameters,
    sample_posterior_sticks,
    sample_sticks,
)
from models.grid import Grid1D, IntervalSet, Rectangle
from utils.error_handling import InvalidMeasureError, InvalidParameterError, SamplingError

C = 2.0
Y_DATA = np.array([0.1, 0.2, 0.3, 0.7, 0.9])


@pytest.fixture
def nu():
    return Grid1D.uniform(16)


@pytest.fixture
def mu():
    return Grid1D.uniform(10)


def comonotone_copula():
    return GridCopula.from_checkerboard(CheckerboardDensity(2 * np.eye(2)))


class TestStickBreaking:
    def test_total_mass_is_one(self, nu, rng):
        batch = sample_sticks(C, nu, 50, rng)
        assert batch.weights.sum(axis=1) == pytest.approx(np.ones(50), abs=1e-12)

    @pytest.mark.slow
    def test_cdf_follows_the_beta_law(self, nu):
        def statistic(batch, rng):
            return batch.cdf(0.3)

        draws = dp_monte_carlo(C, nu, 100_000, statistic, seed=21)
        # G(y) ~ Beta(c F_ν(y), c (1 - F_ν(y)))
        a, b = C * 0.3, C * 0.7
        for order in range(1, 5):
            powers = draws ** order
            se = powers.std(ddof=1) / math.sqrt(draws.size)
            assert abs(powers.mean() - beta_law.moment(order, a, b)) <= 3 * se, order

    def test_empty_posterior_base_reproduces_prior_draws(self, nu):
        prior = sample_sticks(C, nu, 10, np.random.default_rng(4))
        posterior = sample_sticks(C, PosteriorBaseMeasure(C, nu, np.empty(0)), 10, np.random.default_rng(4))
        assert np.array_equal(prior.locations, posterior.locations)
        assert np.array_equal(prior.weights, posterior.weights)

    def test_posterior_base_measure(self, nu):
        base = PosteriorBaseMeasure(C, nu, Y_DATA)
        assert base.total_mass == 7.0
        assert base.mass(IntervalSet.of((0.0, 0.5))) == pytest.approx(4.0)
        assert base.cdf(0.2) == pytest.approx(2.4)
        assert base.cell_masses().sum() == pytest.approx(7.0)

    def test_posterior_parameters(self, nu):
        total, base = posterior_parameters(C, nu, Y_DATA)
        assert total == 7.0
        assert base.n == 5

    def test_single_draw(self, nu, rng):
        draw = dp_stick_breaking(C, nu, rng)
        assert draw.truncation >= 1
        assert draw.to_cdf()(1.0) == pytest.approx(1.0)

    def test_stick_cap(self, nu, rng):
        with pytest.raises(SamplingError):
            sample_sticks(50.0, nu, 5, rng, max_sticks=10)

    def test_posterior_sticks_mix_data_and_prior(self, nu, rng):
        base = PosteriorBaseMeasure(C, nu, np.array([0.2, 0.2, 0.7]))
        batch = sample_posterior_sticks(base, 20, rng)
        assert batch.c == 5.0
        assert batch.weights.shape[0] == 20
        data_mass = batch.weights[:, :2].sum(axis=1)
        assert np.all((data_mass > 0) & (data_mass < 1))
        assert np.array_equal(batch.locations[:, :2], np.tile([0.2, 0.7], (20, 1)))
        assert batch.weights.sum(axis=1) == pytest.approx(np.ones(20), abs=1e-12)

    def test_posterior_sticks_without_data_are_prior_draws(self, nu):
        prior = sample_sticks(C, nu, 10, np.random.default_rng(9))
        posterior = sample_posterior_sticks(PosteriorBaseMeasure(C, nu, np.empty(0)), 10, np.random.default_rng(9))
        assert np.array_equal(prior.weights, posterior.weights)

    def test_posterior_mass_mean(self, nu):
        base = PosteriorBaseMeasure(C, nu, Y_DATA)
        # E Q(B) = ν_n(B) / (c + n), with B holding one observation
        draws = dp_monte_carlo(base.total_mass, base, 20_000, lambda batch, rng: batch.mass(IntervalSet.of((0.09, 0.1))),
                               seed=17)
        se = draws.std(ddof=1) / math.sqrt(draws.size)
        expected = (C * 0.01 + 1.0) / base.total_mass
        assert abs(draws.mean() - expected) <= 3 * se

    def test_posterior_needs_matching_concentration(self, nu):
        base = PosteriorBaseMeasure(C, nu, Y_DATA)
        with pytest.raises(InvalidParameterError):
            dp_monte_carlo(C, base, 1000, lambda batch, rng: batch.cdf(0.5), seed=1)

    def test_large_data_stays_within_memory(self, mu, nu):
        y = np.random.default_rng(5).random(2000)
        partition = SectionPartition.product(10, (np.arange(16) >= 8).astype(int))
        tracemalloc.start()
        try:
            draws = posterior_fdd(C, nu, mu, partition, y, 5000, seed=8)
            _, peak = tracemalloc.get_traced_memory()
        finally:
            tracemalloc.stop()
        assert peak < 600 * 1024 * 1024
        mean, _ = fdd_moments(C, nu, mu, partition, y)
        se = draws.std(axis=0, ddof=1) / math.sqrt(draws.shape[0])
        assert np.all(np.abs(draws.mean(axis=0) - mean) <= 3 * se)

    @pytest.mark.parametrize("c", [0.0, -1.0])
    def test_concentration_must_be_positive(self, nu, rng, c):
        with pytest.raises(InvalidParameterError):
            sample_sticks(c, nu, 5, rng)


class TestFiniteDimensionalLaws:
    def test_product_partition_is_dirichlet(self, mu, nu):
        halves = (np.arange(16) >= 8).astype(int)
        mean, second = fdd_moments(C, nu, mu, SectionPartition.product(10, halves))
        d_mean, d_second = dirichlet_moments([1.0, 1.0])
        assert mean == pytest.approx(d_mean)
        assert second == pytest.approx(d_second)

    def test_monte_carlo_matches_moments(self, mu, nu):
        partition = SectionPartition.product(10, (np.arange(16) >= 4).astype(int))
        draws = product_prior_fdd(C, nu, mu, partition, 10_000, seed=31)
        mean, second = fdd_moments(C, nu, mu, partition)
        se = draws.std(axis=0, ddof=1) / math.sqrt(draws.shape[0])
        assert np.all(np.abs(draws.mean(axis=0) - mean) <= 3 * se)
        assert draws.sum(axis=1) == pytest.approx(np.ones(draws.shape[0]), abs=1e-12)
        squares = draws ** 2
        sq_se = squares.std(axis=0, ddof=1) / math.sqrt(draws.shape[0])
        assert np.all(np.abs(squares.mean(axis=0) - np.diag(second)) <= 3 * sq_se)

    def test_rectangle_split_means(self, mu, nu):
        x_mask = np.arange(10) < 3
        y_mask = np.arange(16) < 8
        mean, _ = fdd_moments(C, nu, mu, SectionPartition.rectangle_split(x_mask, y_mask))
        assert mean == pytest.approx([0.15, 0.15, 0.7])

    def test_single_set(self, mu, nu):
        partition = SectionPartition(np.zeros((10, 16), dtype=int), 1)
        mean, second = fdd_moments(C, nu, mu, partition)
        assert mean.tolist() == pytest.approx([1.0])
        assert second.tolist() == pytest.approx([[1.0]])

    def test_posterior_shifts_mass_to_the_data(self, mu, nu):
        halves = (np.arange(16) >= 8).astype(int)
        partition = SectionPartition.product(10, halves)
        mean, second = fdd_moments(C, nu, mu, partition, Y_DATA)
        # ν_n of the halves: c/2 + 3 and c/2 + 2
        d_mean, d_second = dirichlet_moments([4.0, 3.0])
        assert mean == pytest.approx(d_mean)
        assert second == pytest.approx(d_second)

        draws = posterior_fdd(C, nu, mu, partition, Y_DATA, 20_000, seed=2)
        assert draws.shape == (20_000, 2)
        se = draws.std(axis=0, ddof=1) / math.sqrt(draws.shape[0])
        assert np.all(np.abs(draws.mean(axis=0) - d_mean) <= 3 * se)
        squares = draws ** 2
        sq_se = squares.std(axis=0, ddof=1) / math.sqrt(draws.shape[0])
        assert np.all(np.abs(squares.mean(axis=0) - np.diag(d_second)) <= 3 * sq_se)

    def test_posterior_without_data_repeats_prior_draws(self, mu, nu):
        partition = SectionPartition.product(10, (np.arange(16) >= 8).astype(int))
        prior = product_prior_fdd(C, nu, mu, partition, 1000, seed=6)
        posterior = posterior_fdd(C, nu, mu, partition, [], 1000, seed=6)
        assert np.array_equal(prior, posterior)

    def test_too_few_draws(self, mu, nu):
        with pytest.raises(InvalidParameterError):
            product_prior_fdd(C, nu, mu, SectionPartition.product(10, [0] * 16), 10, seed=1)

    def test_partition_shape_mismatch(self, nu):
        partition = SectionPartition.product(4, [0] * 16)
        with pytest.raises(InvalidMeasureError):
            fdd_moments(C, nu, Grid1D.uniform(10), partition)


class TestProductDPPrior:
    def test_first_marginal_on_random_grid_sets(self, nu):
        rng = np.random.default_rng(31)
        mu = Grid1D.from_weights(rng.dirichlet(np.ones(8)), normalize=True)
        prior = ProductDPPrior(3.0, nu, mu)
        everything = IntervalSet.of((0.0, 1.0))
        for _ in range(20):
            draw = prior.sample(rng)
            cells = np.flatnonzero(rng.random(8) < 0.5)
            A = IntervalSet(tuple((i / 8, (i + 1) / 8) for i in cells))
            assert draw.mass(A, everything) == pytest.approx(A.measure(mu), abs=1e-10)
            assert draw.marginal_error(np.linspace(0.0, 1.0, 21)) < 1e-10

    def test_second_marginal_is_the_dp_draw(self, mu, nu, rng):
        draw = ProductDPPrior(C, nu, mu).sample(rng)
        for t in (0.25, 0.5, 0.8):
            assert draw.rectangle_prob(Rectangle(0.0, 1.0, 0.0, t)) == pytest.approx(float(draw.q.cdf(t)), abs=1e-12)

    def test_points_sit_on_the_atoms(self, mu, nu, rng):
        draw = ProductDPPrior(C, nu, mu).sample(rng)
        x, y = draw.sample_points(200, rng)
        assert x.shape == y.shape == (200,)
        assert np.all((0.0 <= x) & (x <= 1.0))
        assert np.all(np.isin(y, draw.q.locations[draw.q.weights > 0]))

    def test_corner_mean_matches_product(self, mu, nu):
        rng = np.random.default_rng(12)
        prior = ProductDPPrior(C, nu, mu)
        corner = Rectangle.corner(0.5, 0.3)
        probs = np.array([prior.sample(rng).rectangle_prob(corner) for _ in range(4000)])
        # E[Q(B)] = ν(B), Var[Q(B)] = ν(B)(1 - ν(B)) / (c + 1)
        se = 0.5 * math.sqrt(0.3 * 0.7 / (C + 1.0) / probs.size)
        assert abs(probs.mean() - 0.15) < 3 * se

    def test_rejects_bad_concentration(self, mu, nu):
        with pytest.raises(InvalidParameterError):
            ProductDPPrior(0.0, nu, mu)


class TestProductPredictive:
    A = IntervalSet.of((0.0, 0.5))
    B = IntervalSet.of((0.0, 0.25))

    def test_no_data(self, nu):
        mu = Grid1D.uniform(16)
        assert product_prior_predictive(C, nu, mu, [], self.A, self.B) == pytest.approx(0.125)

    def test_all_observations_in_b(self, nu):
        mu = Grid1D.uniform(16)
        value = product_prior_predictive(C, nu, mu, [0.05, 0.1, 0.2], self.A, self.B)
        assert value == pytest.approx(0.5 * (2.0 * 0.25 + 3) / 5.0)

    def test_forward_simulation(self, nu):
        mu = Grid1D.uniform(16)
        B = IntervalSet.of((0.0, 0.5))
        result = forward_predictive_check(C, nu, mu, self.A, B, [True, False], 20_000, seed=9)
        assert result["expected"] == pytest.approx(0.25)
        assert abs(result["estimate"] - result["expected"]) <= 3 * result["se"]


class TestCopulas:
    def test_product_section_inverse(self):
        r = section_inverse(ProductCopula(), 0.5, np.array([0.1, 0.25, 0.4]))
        assert r == pytest.approx([0.2, 0.5, 0.8], abs=1e-10)

    def test_section_inverse_at_the_top(self):
        assert section_inverse(ProductCopula(), 0.5, 0.5) == 1.0

    def test_comonotone_section_inverse(self):
        C_grid = comonotone_copula()
        assert section_inverse(C_grid, 0.5, 0.25) == pytest.approx(0.25, abs=1e-10)
        assert section_inverse(C_grid, 0.5, 0.5) == 1.0

    def test_level_above_u(self):
        with pytest.raises(InvalidParameterError):
            section_inverse(ProductCopula(), 0.5, 0.6)

    def test_checkerboard_of_ones_is_the_product(self):
        grid = GridCopula.from_checkerboard(CheckerboardDensity(np.ones((3, 3))))
        assert grid(0.3, 0.7) == pytest.approx(0.21)

    def test_rejects_non_copula_grid(self):
        with pytest.raises(InvalidMeasureError):
            GridCopula([[0.0, 0.0], [0.0, 0.5]])

    def test_from_dict(self):
        assert isinstance(copula_from_dict({"copula": "product"}), ProductCopula)
        mixture = copula_from_dict({"k": 2, "perms": [[0, 1]], "weights": [1.0]})
        assert mixture(0.5, 0.5) == pytest.approx(0.5)
        with pytest.raises(InvalidParameterError):
            copula_from_dict({"copula": "gumbel"})


class TestComposedCdf:
    def test_prior_law_for_the_product_copula(self, nu):
        F_mu = cdf(Grid1D.uniform(10))
        # u = 1/2 and B_y is Beta(1, 1), so P(F <= a) = 2a
        assert composed_cdf_law(ProductCopula(), F_mu, C, nu, 0.5, 0.5, 0.2) == pytest.approx(0.4, abs=1e-9)

    def test_posterior_parameters(self, nu):
        F_mu = cdf(Grid1D.uniform(10))
        value = composed_cdf_posterior(ProductCopula(), F_mu, C, nu, Y_DATA, 0.5, 0.5, 0.2)
        assert value == pytest.approx(beta_law.cdf(0.4, 4.0, 3.0), abs=1e-9)

    def test_vectorized_levels(self, nu, mu):
        values = composed_cdf_law(ProductCopula(), mu, C, nu, 0.5, 0.5, np.array([0.0, 0.25, 0.5]))
        assert values == pytest.approx([0.0, 0.5, 1.0], abs=1e-9)

    @pytest.mark.parametrize("x,y", [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.0)])
    def test_boundary_points(self, nu, mu, x, y):
        with pytest.raises(InvalidParameterError):
            composed_cdf_law(ProductCopula(), mu, C, nu, x, y, 0.0)

    def test_kolmogorov_smirnov(self, nu, mu):
        n_mc = 2000
        critical = kstwo.ppf(1.0 - 1e-3, n_mc)
        prior = beta_law_ks(ProductCopula(), mu, C, nu, 0.5, 0.3, n_mc, seed=13)
        post = beta_law_ks(ProductCopula(), mu, C, nu, 0.4, 0.6, n_mc, seed=14, y_data=Y_DATA)
        assert prior["statistic"] < critical
        assert post["statistic"] < critical

    def test_composed_function(self, mu, nu, rng):
        G = dp_stick_breaking(C, nu, rng)
        F = ComposedCdf(ProductCopula(), cdf(mu), G)
        assert F(1.0, 1.0) == pytest.approx(1.0)
        assert F(0.5, 1.0) == pytest.approx(0.5)

    def test_random_copula_draws(self, mu, nu):
        sampler = CheckerboardCopulaPrior(CheckerboardPrior.full(2, 1.0))
        draws = simulate_composed_cdf(sampler, mu, C, nu, 0.5, 0.5, 1000, seed=3)
        assert draws.shape == (1000,)
        assert np.all((draws >= 0.0) & (draws <= 0.5 + 1e-12))


class TestRandomCopulaLaw:
    def test_degenerate_mixture_is_the_fixed_law(self, mu, nu):
        sampler = FiniteCopulaMixture((ProductCopula(),), [1.0])
        mean, se = random_copula_law(sampler, mu, C, nu, 0.5, 0.5, 0.2, 200, seed=1)
        assert mean == pytest.approx(composed_cdf_law(ProductCopula(), mu, C, nu, 0.5, 0.5, 0.2), abs=1e-12)
        assert se == pytest.approx(0.0, abs=1e-12)

    def test_two_point_mixture(self, mu, nu):
        copulas = (ProductCopula(), comonotone_copula())
        sampler = FiniteCopulaMixture(copulas, [0.5, 0.5])
        mean, se = random_copula_law(sampler, mu, C, nu, 0.5, 0.5, 0.2, 4000, seed=2)
        expected = 0.5 * sum(composed_cdf_law(cop, mu, C, nu, 0.5, 0.5, 0.2) for cop in copulas)
        assert abs(mean - expected) <= 3 * se

    def test_posterior_version(self, mu, nu):
        sampler = FiniteCopulaMixture((ProductCopula(),), [1.0])
        mean, _ = random_copula_law(sampler, mu, C, nu, 0.5, 0.5, 0.2, 100, seed=1, y_data=Y_DATA)
        assert mean == pytest.approx(beta_law.cdf(0.4, 4.0, 3.0), abs=1e-9)

    def test_level_outside_section(self, mu, nu):
        sampler = FiniteCopulaMixture((ProductCopula(),), [1.0])
        with pytest.raises(InvalidParameterError):
            random_copula_law(sampler, mu, C, nu, 0.5, 0.5, 0.7, 100, seed=1)
