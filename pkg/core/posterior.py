"""
Bayesian updating of random densities on [0,1]^2

Π(df | Z_1..Z_n) ∝ Π_i f(Z_i) Π(df). Checkerboard priors get the exact
mixture-of-Dirichlet posterior; any prior whose draws can be evaluated gets
a weighted-particle posterior by importance sampling from the prior.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass
from itertools import combinations_with_replacement, permutations
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gammaln, logsumexp
from scipy.stats import beta as beta_law
from scipy.stats import chisquare

from config.settings import get_setting
from core.checkerboard_prior import (
    CheckerboardMixture,
    CheckerboardPrior,
    cell_index,
    rectangle_coefficients,
    sample_dirichlet,
)
from models.grid import Rectangle
from models.observation import Observation, from_arrays, to_arrays
from utils.error_handling import InvalidParameterError, ZeroEvidenceError
from utils.random_streams import SeedLike, make_rng, map_chunks

logger = logging.getLogger(__name__)

MIN_PARTICLES = 1000


def cover_sets(prior: CheckerboardPrior, data: Sequence[Observation]) -> List[Tuple[int, ...]]:
    """For each Z_i the indices j with Z_i ∈ S_{σ_j}"""
    xs, ys = to_arrays(data)
    if not data:
        return []
    perms = np.asarray(prior.perms)
    ix = cell_index(xs, prior.k)
    iy = cell_index(ys, prior.k)
    inside = perms[:, ix].T == iy[:, None]
    return [tuple(np.flatnonzero(row).tolist()) for row in inside]


def _compositions(cover: Tuple[int, ...], count: int, m: int):
    """Count vectors spreading `count` assignments over `cover`, with multinomial multiplicities"""
    for combo in combinations_with_replacement(cover, count):
        tally = Counter(combo)
        vector = [0] * m
        multiplicity = math.factorial(count)
        for j, c in tally.items():
            vector[j] = c
            multiplicity //= math.factorial(c)
        yield tuple(vector), multiplicity


def count_expansion(covers: Sequence[Tuple[int, ...]], m: int, max_components: Optional[int] = None) -> Dict[Tuple[int, ...], int]:
    """
    Expand Π_i Σ_{j ∈ C_i} U_j into Σ_n M(n) U^n with exact integer
    multiplicities M(n). Observations sharing a cover set are expanded together.
    """
    max_components = max_components or int(get_setting("MAX_POSTERIOR_COMPONENTS", 1_000_000))
    expansion: Dict[Tuple[int, ...], int] = {tuple([0] * m): 1}

    for cover, count in sorted(Counter(covers).items()):
        if not cover:
            raise ZeroEvidenceError("An observation lies outside the support of every permutation density")
        block = list(_compositions(cover, count, m))
        merged: Dict[Tuple[int, ...], int] = {}
        for vector, mult in expansion.items():
            for extra, extra_mult in block:
                key = tuple(a + b for a, b in zip(vector, extra))
                merged[key] = merged.get(key, 0) + mult * extra_mult
        if len(merged) > max_components:
            raise InvalidParameterError(
                f"Exact posterior needs {len(merged)} components, above the limit of {max_components}; use importance sampling"
            )
        expansion = merged

    logger.debug(f"Exact posterior expansion has {len(expansion)} components")
    return expansion


@dataclass(frozen=True, eq=False)
class DirichletMixturePosterior:
    """Σ_c w_c Dir(α_c) over the weights of a fixed permutation list"""
    k: int
    perms: Tuple[Tuple[int, ...], ...]
    alphas: np.ndarray
    weights: np.ndarray
    log_evidence: float = 0.0
    n_obs: int = 0

    def __post_init__(self):
        alphas = np.atleast_2d(np.asarray(self.alphas, dtype=float))
        weights = np.asarray(self.weights, dtype=float).ravel()
        if alphas.shape != (weights.size, len(self.perms)):
            raise InvalidParameterError(f"Component parameters {alphas.shape} do not match {weights.size} weights")
        if np.any(alphas <= 0) or np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise InvalidParameterError("Posterior components need positive parameters and simplex weights")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "weights", weights)

    @property
    def n_components(self) -> int:
        return self.weights.size

    @property
    def evidence(self) -> float:
        return math.exp(self.log_evidence)

    def components(self) -> List[Tuple[np.ndarray, float]]:
        return list(zip(self.alphas, self.weights))

    def mean_weights(self) -> np.ndarray:
        """E[U | data] = Σ_c w_c α_c / Σα_c"""
        return self.weights @ (self.alphas / self.alphas.sum(axis=1, keepdims=True))

    def second_moments(self) -> np.ndarray:
        """E[U_j^2 | data]"""
        a0 = self.alphas.sum(axis=1, keepdims=True)
        return self.weights @ (self.alphas * (self.alphas + 1) / (a0 * (a0 + 1)))

    def variance_weights(self) -> np.ndarray:
        return self.second_moments() - self.mean_weights() ** 2

    def marginal_sf(self, j: int, t: float) -> float:
        """P(U_j > t | data); each component's marginal is Beta(α_j, α_0 - α_j)"""
        a = self.alphas[:, j]
        b = self.alphas.sum(axis=1) - a
        if len(self.perms) == 1:
            return 1.0 if t < 1.0 else 0.0
        return float(self.weights @ beta_law.sf(t, a, b))

    def mean_mixture(self) -> CheckerboardMixture:
        mean = self.mean_weights()
        return CheckerboardMixture(self.k, self.perms, mean / mean.sum())

    def predictive(self, rect: Rectangle) -> float:
        """P(Z_{n+1} ∈ H | data); P_f(H) is linear in U so the posterior mean suffices"""
        return float(np.clip(self.mean_mixture().rectangle_prob(rect), 0.0, 1.0))

    def rectangle_moments(self, rect: Rectangle) -> Tuple[float, float]:
        """Posterior mean and variance of P_f(H)"""
        c = rectangle_coefficients(self.perms, self.k, rect)
        a0 = self.alphas.sum(axis=1, keepdims=True)
        means = self.alphas / a0
        mean = float(self.weights @ (means @ c))
        # Dirichlet covariance: (diag(m) - m m^T) / (α0 + 1), per component
        second = 0.0
        for w, m_c, s in zip(self.weights, means, a0.ravel()):
            cov = (np.diag(m_c) - np.outer(m_c, m_c)) / (s + 1.0)
            second += w * (c @ cov @ c + (m_c @ c) ** 2)
        return mean, float(second - mean ** 2)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """(size, m) posterior draws of U"""
        idx = rng.choice(self.n_components, size=size, p=self.weights)
        return np.array([sample_dirichlet(self.alphas[i], rng) for i in idx])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": "exact",
            "k": self.k,
            "perms": [list(s) for s in self.perms],
            "n_obs": self.n_obs,
            "log_evidence": self.log_evidence,
            "posterior_mean": self.mean_weights().tolist(),
            "posterior_variance": self.variance_weights().tolist(),
            "components": [{"alpha": a.tolist(), "weight": float(w)} for a, w in self.components()],
        }


def exact_checkerboard_posterior(prior: CheckerboardPrior, data: Sequence[Observation]) -> DirichletMixturePosterior:
    """
    Likelihood Π_i (k Σ_{j: Z_i ∈ S_σj} U_j) times Dir(α) expands into a
    mixture of Dir(α + n) over count vectors n, with weight ∝ M(n) B(α+n)/B(α).
    """
    n = len(data)
    expansion = count_expansion(cover_sets(prior, data), prior.m)
    counts = np.array(list(expansion.keys()), dtype=float).reshape(-1, prior.m)
    log_mult = np.array([math.log(mult) for mult in expansion.values()])

    alpha = prior.alphas
    log_b_prior = gammaln(alpha).sum() - gammaln(alpha.sum())
    post = alpha + counts
    log_b_post = gammaln(post).sum(axis=1) - gammaln(post.sum(axis=1))
    log_terms = log_mult + log_b_post - log_b_prior

    log_total = logsumexp(log_terms)
    weights = np.exp(log_terms - log_total)
    log_evidence = float(n * math.log(prior.k) + log_total)

    logger.info(f"Exact posterior: {weights.size} components from {n} observations, log evidence {log_evidence:.6f}")
    return DirichletMixturePosterior(prior.k, prior.perms, post, weights / weights.sum(), log_evidence, n)


def _default_evaluator(draw, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    return np.asarray(draw.density(xs, ys), dtype=float)


@dataclass(frozen=True, eq=False)
class WeightedPosterior:
    """Prior draws with normalized importance weights ∝ Π_i f(Z_i)"""
    particles: Tuple[Any, ...]
    weights: np.ndarray
    log_evidence: float
    evidence_se: float
    ess: float
    n_obs: int = 0

    @property
    def evidence(self) -> float:
        return math.exp(self.log_evidence)

    @property
    def n_particles(self) -> int:
        return len(self.particles)

    def expectation(self, fn: Callable[[Any], Any]) -> Tuple[np.ndarray, np.ndarray]:
        """Self-normalized estimate of E[fn(f) | data] and its delta-method s.e."""
        values = np.array([fn(p) for p in self.particles], dtype=float)
        return self.expectation_of(values)

    def expectation_of(self, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Same as expectation for precomputed per-particle values (first axis = particle)"""
        values = np.asarray(values, dtype=float)
        w = self.weights.reshape((-1,) + (1,) * (values.ndim - 1))
        mean = (w * values).sum(axis=0)
        se = np.sqrt((w ** 2 * (values - mean) ** 2).sum(axis=0))
        return mean, se

    def _checkerboard_coefficients(self, rect: Rectangle) -> Optional[np.ndarray]:
        first = self.particles[0] if self.particles else None
        if not isinstance(first, CheckerboardMixture):
            return None
        if not all(isinstance(p, CheckerboardMixture) and p.perms == first.perms for p in self.particles):
            return None
        return np.stack([p.weights for p in self.particles]) @ rectangle_coefficients(first.perms, first.k, rect)

    def rectangle_expectation(self, rect: Rectangle) -> Tuple[float, float]:
        values = self._checkerboard_coefficients(rect)
        if values is None:
            values = np.array([p.rectangle_prob(rect) for p in self.particles])
        mean, se = self.expectation_of(values)
        return float(mean), float(se)

    def predictive(self, rect: Rectangle) -> float:
        return float(np.clip(self.rectangle_expectation(rect)[0], 0.0, 1.0))

    def to_dict(self) -> Dict[str, Any]:
        out = {
            "method": "is",
            "n_particles": self.n_particles,
            "n_obs": self.n_obs,
            "log_evidence": self.log_evidence,
            "evidence_se": self.evidence_se,
            "ess": self.ess,
        }
        if self.particles and isinstance(self.particles[0], CheckerboardMixture):
            mean, se = self.expectation_of(np.stack([p.weights for p in self.particles]))
            out.update({"k": self.particles[0].k, "perms": [list(s) for s in self.particles[0].perms],
                        "posterior_mean": mean.tolist(), "posterior_mean_se": se.tolist()})
        return out


Posterior = Union[WeightedPosterior, DirichletMixturePosterior]


def is_posterior(
    sampler,
    evaluator: Optional[Callable[[Any, np.ndarray, np.ndarray], np.ndarray]],
    data: Sequence[Observation],
    n_particles: int,
    seed: SeedLike = None,
    workers: Optional[int] = None,
) -> WeightedPosterior:
    """
    Importance sampling with the prior as proposal. The sampler exposes
    sample(rng); the evaluator returns f(Z_i) >= 0 for a draw.
    """
    if n_particles < MIN_PARTICLES:
        raise InvalidParameterError(f"n_particles must be at least {MIN_PARTICLES}, got {n_particles}")
    evaluator = evaluator or _default_evaluator
    xs, ys = to_arrays(data)

    def run_chunk(rng: np.random.Generator, size: int):
        draws, log_w = [], np.empty(size)
        for i in range(size):
            draw = sampler.sample(rng)
            values = evaluator(draw, xs, ys) if xs.size else np.empty(0)
            if np.any(values < 0):
                raise InvalidParameterError("Density evaluator returned a negative value")
            with np.errstate(divide="ignore"):
                log_w[i] = np.sum(np.log(values))
            draws.append(draw)
        return draws, log_w

    chunks = map_chunks(run_chunk, n_particles, seed, workers=workers)
    particles = tuple(d for draws, _ in chunks for d in draws)
    log_w = np.concatenate([lw for _, lw in chunks])

    if not np.any(np.isfinite(log_w)):
        raise ZeroEvidenceError("Every prior draw gives zero likelihood to the data")

    log_sum = logsumexp(log_w)
    weights = np.exp(log_w - log_sum)
    log_evidence = float(log_sum - math.log(n_particles))

    # s.e. of the mean raw weight, computed relative to the largest weight
    scaled = np.exp(log_w - log_w.max())
    evidence_se = float(np.std(scaled, ddof=1) / math.sqrt(n_particles) * math.exp(log_w.max()))
    ess = float(1.0 / np.sum(weights ** 2))

    if ess < 0.01 * n_particles:
        logger.warning(f"Importance sampling is degenerate: ESS {ess:.1f} of {n_particles} particles")
    logger.info(f"IS posterior: {n_particles} particles, ESS {ess:.1f}, log evidence {log_evidence:.6f}")
    return WeightedPosterior(particles, weights, log_evidence, evidence_se, ess, len(data))


def predictive(post: Posterior, rect: Rectangle) -> float:
    """P(Z_{n+1} ∈ H | Z_1..Z_n)"""
    return post.predictive(rect)


def sample_exchangeable(sampler, n: int, seed: SeedLike = None, rng: Optional[np.random.Generator] = None):
    """One density from the prior, then n i.i.d. points from it"""
    if n < 0:
        raise InvalidParameterError(f"n must be non-negative, got {n}")
    rng = rng or make_rng(seed)
    draw = sampler.sample(rng)
    x, y = draw.sample_points(n, rng)
    return draw, from_arrays(x, y)


def _triple_orbits(n_cells: int) -> List[np.ndarray]:
    """Codes of (c_1, c_2, c_3) grouped by orbits of the coordinate permutations"""
    orbits = []
    for multiset in combinations_with_replacement(range(n_cells), 3):
        members = {(a * n_cells + b) * n_cells + c for a, b, c in permutations(multiset)}
        if len(members) > 1:
            orbits.append(np.array(sorted(members)))
    return orbits


def exchangeability_diagnostic(sampler, n_rep: int, seed: SeedLike = None, cells: int = 2,
                               level: float = 1e-3, workers: Optional[int] = None) -> Dict[str, Any]:
    """
    Chi-square check that (Z_1, Z_2, Z_3) is exchangeable. Each replication draws
    a fresh density and three points from it; points are labelled by their cell
    in a cells x cells partition, and the counts of label triples are compared
    with the average count over the triples' permutations.
    """
    if n_rep < 1 or cells < 1:
        raise InvalidParameterError(f"Need n_rep >= 1 and cells >= 1, got {n_rep}, {cells}")
    n_cells = cells * cells

    def run_chunk(rng: np.random.Generator, size: int) -> np.ndarray:
        labels = np.empty((size, 3), dtype=int)
        for i in range(size):
            _, data = sample_exchangeable(sampler, 3, rng=rng)
            xs, ys = to_arrays(data)
            labels[i] = cell_index(xs, cells) * cells + cell_index(ys, cells)
        return labels

    labels = np.concatenate(map_chunks(run_chunk, n_rep, seed, workers=workers))
    codes = (labels[:, 0] * n_cells + labels[:, 1]) * n_cells + labels[:, 2]
    counts = np.bincount(codes, minlength=n_cells ** 3)

    observed, expected, used = [], [], 0
    for members in _triple_orbits(n_cells):
        total = counts[members].sum()
        if total == 0:
            continue
        observed.append(counts[members])
        expected.append(np.full(members.size, total / members.size))
        used += 1

    if not used:
        statistic, pvalue, df = 0.0, 1.0, 0
    else:
        observed, expected = np.concatenate(observed), np.concatenate(expected)
        df = observed.size - used
        # One constraint per orbit: chisquare's df is size - 1 - ddof
        result = chisquare(observed, expected, ddof=used - 1)
        statistic, pvalue = float(result.statistic), float(result.pvalue)

    logger.debug(f"Exchangeability chi-square {statistic:.3f} on {df} df over {n_rep} replications (p={pvalue:.4g})")
    return {"statistic": statistic, "pvalue": pvalue, "df": df, "n_rep": n_rep, "passed": pvalue >= level}
