"""
Priors on Γ(μ): measures on [0,1]^2 with first marginal μ and a free second marginal

Two constructions:
  - the product prior P = μ × Q with Q a Dirichlet random probability
    measure DP(c, ν), updated by conjugacy of Q;
  - the composed distribution function F(x, y) = C[F_μ(x), G(y)] with G the
    distribution function of Q, whose one-dimensional laws are beta laws
    evaluated at the section inverse r(x, a) of the copula.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import beta as beta_law
from scipy.stats import kstest

from core.copulas import Copula, section_inverse
from core.stick_breaking import DPStickBreaking, PosteriorBaseMeasure, StickBreakingBatch, dp_monte_carlo, dp_stick_breaking
from models.grid import Cdf1D, Grid1D, IntervalSet, Rectangle
from models.observation import Observation, to_arrays
from utils.error_handling import InvalidMeasureError, InvalidParameterError
from utils.random_streams import SeedLike, map_chunks

logger = logging.getLogger(__name__)

MIN_MC = 1000


@dataclass(frozen=True, eq=False)
class SectionPartition:
    """
    Partition H_1..H_m of [0,1]^2 made of grid cells: labels[a, b] = i when
    μ-cell a × ν-cell b belongs to H_i. The section H_i^x for x in μ-cell a
    is the union of ν-cells b with labels[a, b] = i.
    """
    labels: np.ndarray
    m: int

    def __post_init__(self):
        labels = np.array(self.labels, dtype=int)
        if labels.ndim != 2 or labels.size == 0:
            raise InvalidParameterError(f"Partition labels must be a non-empty matrix, got shape {labels.shape}")
        if self.m < 1 or labels.min() < 0 or labels.max() >= self.m:
            raise InvalidParameterError(f"Partition labels must lie in 0..{self.m - 1}")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        empty = sorted(set(range(self.m)) - set(np.unique(labels).tolist()))
        if empty:
            logger.warning(f"Partition sets {empty} are empty; their coordinates are identically zero")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.labels.shape

    @classmethod
    def product(cls, n_x: int, y_labels: Sequence[int]) -> "SectionPartition":
        """H_i = [0,1] × B_i with B_i given by labels of the ν-cells"""
        y_labels = np.asarray(y_labels, dtype=int)
        return cls(np.tile(y_labels, (n_x, 1)), int(y_labels.max()) + 1)

    @classmethod
    def rectangle_split(cls, x_mask: Sequence[bool], y_mask: Sequence[bool]) -> "SectionPartition":
        """A×B, A×B^c, A^c×[0,1]"""
        x_mask = np.asarray(x_mask, dtype=bool)
        y_mask = np.asarray(y_mask, dtype=bool)
        labels = np.where(x_mask[:, None], np.where(y_mask[None, :], 0, 1), 2)
        return cls(labels, 3)

    def section(self, a: int) -> np.ndarray:
        """Labels of the ν-cells along the section through μ-cell a"""
        return self.labels[a]

    def mixing_matrix(self, mu: Grid1D) -> np.ndarray:
        """M[b, i] = Σ_a μ_a 1{labels[a, b] = i}, so that P(H) = Q_cells @ M"""
        if mu.n_cells != self.shape[0]:
            raise InvalidMeasureError(f"μ has {mu.n_cells} cells, partition has {self.shape[0]} rows")
        onehot = self.labels[..., None] == np.arange(self.m)
        return np.einsum("a,abi->bi", mu.weights, onehot)

    def to_dict(self) -> Dict[str, Any]:
        return {"m": self.m, "labels": self.labels.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SectionPartition":
        return cls(np.asarray(data["labels"], dtype=int), int(data["m"]))


def _check_concentration(c: float) -> None:
    if c <= 0:
        raise InvalidParameterError(f"Concentration must be positive, got {c}")


def _y_values(data) -> np.ndarray:
    data = [] if data is None else list(data)
    if data and isinstance(data[0], Observation):
        return to_arrays(data)[1]
    return np.asarray(data, dtype=float)


def _fdd_samples(c_total: float, base, nu: Grid1D, mu: Grid1D, partition: SectionPartition,
                 n_mc: int, seed: SeedLike, workers: Optional[int]) -> np.ndarray:
    if n_mc < MIN_MC:
        raise InvalidParameterError(f"n_mc must be at least {MIN_MC}, got {n_mc}")
    if partition.shape[1] != nu.n_cells:
        raise InvalidMeasureError(f"ν has {nu.n_cells} cells, partition has {partition.shape[1]} columns")
    M = partition.mixing_matrix(mu)

    def statistic(batch: StickBreakingBatch, rng: np.random.Generator) -> np.ndarray:
        return batch.cell_masses(nu.n_cells) @ M

    return dp_monte_carlo(c_total, base, n_mc, statistic, seed=seed, workers=workers)


def product_prior_fdd(c: float, nu: Grid1D, mu: Grid1D, partition: SectionPartition, n_mc: int,
                      seed: SeedLike = None, workers: Optional[int] = None) -> np.ndarray:
    """(n_mc, m) draws of (P(H_1), ..., P(H_m)) with P = μ × Q, Q ~ DP(c, ν)"""
    _check_concentration(c)
    return _fdd_samples(c, nu, nu, mu, partition, n_mc, seed, workers)


def posterior_fdd(c: float, nu: Grid1D, mu: Grid1D, partition: SectionPartition, data, n_mc: int,
                  seed: SeedLike = None, workers: Optional[int] = None) -> np.ndarray:
    """As product_prior_fdd with Q ~ DP(c + n, ν_n / (c + n)); only the Y values matter"""
    _check_concentration(c)
    base = PosteriorBaseMeasure(c, nu, _y_values(data))
    return _fdd_samples(base.total_mass, base, nu, mu, partition, n_mc, seed, workers)


def fdd_moments(c: float, nu: Grid1D, mu: Grid1D, partition: SectionPartition, data=()) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exact mean vector and second-moment matrix of (P(H_1), ..., P(H_m)),
    using E[Q(A) Q(B)] = (s ν̄(A) ν̄(B) + ν̄(A ∩ B)) / (s + 1) for Q ~ DP(s, ν̄).
    """
    _check_concentration(c)
    base = PosteriorBaseMeasure(c, nu, _y_values(data))
    s = base.total_mass
    v = base.cell_masses() / s
    M = partition.mixing_matrix(mu)
    mean = v @ M
    second = (s * np.outer(mean, mean) + M.T @ (v[:, None] * M)) / (s + 1.0)
    return mean, second


def dirichlet_moments(params: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Mean and second-moment matrix of Dir(params)"""
    params = np.asarray(params, dtype=float)
    s = params.sum()
    mean = params / s
    return mean, (np.outer(params, params) + np.diag(params)) / (s * (s + 1.0))


def product_prior_predictive(c: float, nu: Grid1D, mu: Grid1D, data, A: IntervalSet, B: IntervalSet) -> float:
    """P(X_{n+1} ∈ A, Y_{n+1} ∈ B | data) = μ(A) ν_n(B) / (c + n)"""
    _check_concentration(c)
    base = PosteriorBaseMeasure(c, nu, _y_values(data))
    return A.measure(mu) * base.mass(B) / base.total_mass


@dataclass(frozen=True, eq=False)
class ProductMeasure:
    """P = μ × Q for one realization Q of DP(c, ν); its first marginal is μ exactly"""
    mu: Grid1D
    q: DPStickBreaking

    def mass(self, A: IntervalSet, B: IntervalSet) -> float:
        return A.measure(self.mu) * self.q.mass(B)

    def rectangle_prob(self, rect: Rectangle) -> float:
        """μ([x0, x1]) Q((y0, y1]); an atom exactly at y0 > 0 is left out"""
        return self.mu.interval_mass(rect.x0, rect.x1) * self.q.mass(IntervalSet.of((rect.y0, rect.y1)))

    def marginal_error(self, points: Sequence[float]) -> float:
        """max_t |P([0,t]×[0,1]) - μ([0,t])|; the second marginal is Q, not ν"""
        return max((abs(self.rectangle_prob(Rectangle(0.0, t, 0.0, 1.0)) - float(self.mu.cdf_at(t)))
                    for t in points), default=0.0)

    def sample_points(self, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        x = self.mu.sample(rng, n)
        keep = self.q.weights > 0
        weights = self.q.weights[keep]
        y = rng.choice(self.q.locations[keep], size=n, p=weights / weights.sum())
        return x, y

    def to_dict(self) -> Dict[str, Any]:
        return {"mu": self.mu.to_dict(), "q": self.q.to_dict()}


@dataclass(frozen=True, eq=False)
class ProductDPPrior:
    """Random element μ × Q of Γ(μ) with Q ~ DP(c, ν)"""
    c: float
    nu: Grid1D
    mu: Grid1D

    def __post_init__(self):
        _check_concentration(self.c)

    def sample(self, rng: np.random.Generator) -> ProductMeasure:
        return ProductMeasure(self.mu, dp_stick_breaking(self.c, self.nu, rng))


def forward_predictive_check(c: float, nu: Grid1D, mu: Grid1D, A: IntervalSet, B: IntervalSet,
                             pattern: Sequence[bool], n_rep: int, seed: SeedLike = None,
                             workers: Optional[int] = None) -> Dict[str, float]:
    """
    Simulate (Q, Z_1..Z_{n+1}) under the product prior and estimate
    P(X_{n+1} ∈ A, Y_{n+1} ∈ B | 1{Y_i ∈ B} = pattern_i for i <= n).
    Given Q the events {Y_i ∈ B} are i.i.d. Bernoulli(Q(B)).
    """
    _check_concentration(c)
    pattern = np.asarray(pattern, dtype=bool)
    mu_a = A.measure(mu)

    def statistic(batch: StickBreakingBatch, rng: np.random.Generator) -> np.ndarray:
        q = batch.mass(B)
        seen = rng.random((batch.size, pattern.size)) < q[:, None]
        matches = np.all(seen == pattern[None, :], axis=1)
        hit = (rng.random(batch.size) < mu_a) & (rng.random(batch.size) < q)
        return np.column_stack([matches, matches & hit])

    stats = dp_monte_carlo(c, nu, n_rep, statistic, seed=seed, workers=workers)
    kept = int(stats[:, 0].sum())
    if kept == 0:
        raise InvalidParameterError("No replication matched the conditioning pattern; increase n_rep")
    estimate = stats[:, 1].sum() / kept
    in_b = int(pattern.sum())
    expected = mu_a * (c * B.measure(nu) + in_b) / (c + pattern.size)
    return {
        "estimate": float(estimate),
        "se": float(math.sqrt(max(estimate * (1 - estimate), 1e-300) / kept)),
        "expected": float(expected),
        "kept": kept,
        "n_rep": n_rep,
    }


def _cdf_value(F, t: float) -> float:
    if isinstance(F, Grid1D):
        return float(F.cdf_at(t))
    return float(F(t))


def _beta_parameters(c: float, nu: Grid1D, y: float, y_data=()) -> Tuple[float, float]:
    Fy = float(nu.cdf_at(y))
    if not 0.0 < Fy < 1.0:
        raise InvalidParameterError(f"F_ν(y) must lie strictly inside (0,1), got {Fy}")
    y_data = np.asarray(list(y_data), dtype=float)
    below = float(np.count_nonzero(y_data <= y))
    return c * Fy + below, c * (1.0 - Fy) + (y_data.size - below)


def _checked_u(F_mu, x: float) -> float:
    u = _cdf_value(F_mu, x)
    if not 0.0 < u < 1.0:
        raise InvalidParameterError(f"F_μ(x) must lie strictly inside (0,1), got {u}")
    return u


@dataclass(frozen=True, eq=False)
class ComposedCdf:
    """F(x, y) = C[F_μ(x), G(y)]"""
    copula: Copula
    F_mu: Cdf1D
    G: Any

    def __call__(self, x, y) -> np.ndarray:
        G = self.G.cdf(y) if hasattr(self.G, "cdf") else self.G(y)
        return self.copula(self.F_mu(x), G)


def composed_cdf_law(C: Copula, F_mu, c: float, nu: Grid1D, x: float, y: float, a) -> np.ndarray:
    """P(F(x, y) <= a) = B_y[r(x, a)], B_y the Beta(c F_ν(y), c(1 - F_ν(y))) distribution function"""
    return composed_cdf_posterior(C, F_mu, c, nu, (), x, y, a)


def composed_cdf_posterior(C: Copula, F_mu, c: float, nu: Grid1D, y_data, x: float, y: float, a) -> np.ndarray:
    """P(F(x, y) <= a | Y_1..Y_n) = B_{n,y}[r(x, a)]"""
    _check_concentration(c)
    u = _checked_u(F_mu, x)
    p, q = _beta_parameters(c, nu, y, _y_values(y_data))
    r = section_inverse(C, u, a)
    value = beta_law.cdf(r, p, q)
    return float(value) if np.ndim(value) == 0 else value


def simulate_composed_cdf(C, F_mu, c: float, nu: Grid1D, x: float, y: float, n_mc: int,
                          seed: SeedLike = None, y_data=(), workers: Optional[int] = None) -> np.ndarray:
    """
    Forward draws of F(x, y) = C[F_μ(x), G(y)] with G from stick-breaking.
    C is a fixed copula or a copula sampler; a sampler is redrawn per replication.
    """
    _check_concentration(c)
    u = _checked_u(F_mu, x)
    base = PosteriorBaseMeasure(c, nu, _y_values(y_data))
    sampler = C if hasattr(C, "sample") else None

    def statistic(batch: StickBreakingBatch, rng: np.random.Generator) -> np.ndarray:
        g = batch.cdf(y)
        if sampler is None:
            return C(u, g)
        return np.array([sampler.sample(rng)(u, gi) for gi in g], dtype=float)

    return dp_monte_carlo(base.total_mass, base, n_mc, statistic, seed=seed, workers=workers)


def beta_law_ks(C: Copula, F_mu, c: float, nu: Grid1D, x: float, y: float, n_mc: int,
                seed: SeedLike = None, y_data=(), workers: Optional[int] = None) -> Dict[str, float]:
    """Kolmogorov-Smirnov comparison of simulated F(x, y) with B_{n,y}[r(x, ·)]"""
    draws = simulate_composed_cdf(C, F_mu, c, nu, x, y, n_mc, seed=seed, y_data=y_data, workers=workers)
    u = _checked_u(F_mu, x)
    def law(a):
        return composed_cdf_posterior(C, F_mu, c, nu, y_data, x, y, np.clip(a, 0.0, u))

    result = kstest(draws, law)
    return {"statistic": float(result.statistic), "pvalue": float(result.pvalue), "n": n_mc}


def random_copula_law(copula_sampler, F_mu, c: float, nu: Grid1D, x: float, y: float, a: float,
                      n_mc: int, seed: SeedLike = None, y_data=(), workers: Optional[int] = None) -> Tuple[float, float]:
    """
    Π_C-average of B_{n,y}[r_C(x, a)] by Monte Carlo over copula draws, with
    its standard error. r_C is recomputed for every draw.
    """
    _check_concentration(c)
    if n_mc < 1:
        raise InvalidParameterError(f"n_mc must be positive, got {n_mc}")
    u = _checked_u(F_mu, x)
    if not 0.0 <= a <= u:
        raise InvalidParameterError(f"a must lie in [0, {u}], got {a}")
    p, q = _beta_parameters(c, nu, y, _y_values(y_data))

    def run_chunk(rng: np.random.Generator, size: int) -> np.ndarray:
        return np.array([beta_law.cdf(section_inverse(copula_sampler.sample(rng), u, a), p, q) for _ in range(size)])

    values = np.concatenate(map_chunks(run_chunk, n_mc, seed, workers=workers))
    se = float(values.std(ddof=1) / math.sqrt(n_mc)) if n_mc > 1 else 0.0
    return float(values.mean()), se
