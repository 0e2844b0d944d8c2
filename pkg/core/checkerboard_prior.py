"""
Checkerboard priors on Γ(m,m): mixtures of permutation densities, their
doubly-stochastic matrix form, and projection of couplings onto k×k grids

Cells are I_j = [j/k, (j+1)/k] with 0-based j; permutations are 0-based
tuples, sigma[j] = h meaning cell row j is matched with column h.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import get_setting
from core.measures import bl_distance_refined, has_marginals
from models.grid import Grid1D, Grid2D, Rectangle, overlap_matrix
from utils.error_handling import InvalidMeasureError, InvalidParameterError
from utils.random_streams import SeedLike, make_rng

logger = logging.getLogger(__name__)

Permutation = Tuple[int, ...]


def _check_permutation(sigma: Sequence[int], k: int) -> Permutation:
    sigma = tuple(int(s) for s in sigma)
    if len(sigma) != k or sorted(sigma) != list(range(k)):
        raise InvalidMeasureError(f"{sigma} is not a permutation of 0..{k - 1}")
    return sigma


def all_permutations(k: int) -> List[Permutation]:
    """Every permutation of 0..k-1; only enumerated for small k"""
    limit = get_setting("FULL_PERMUTATION_MAX_K", 6)
    if k > limit:
        raise InvalidParameterError(f"Refusing to enumerate {k}! permutations (k > {limit}); pass an explicit list")
    return list(itertools.permutations(range(k)))


def cell_overlap(k: int, j: int, upper: Fraction) -> Fraction:
    """m(I_j ∩ [0, upper]) as an exact rational"""
    lo = Fraction(j, k)
    hi = Fraction(j + 1, k)
    return max(Fraction(0), min(hi, upper) - lo)


def cell_index(t, k: int) -> np.ndarray:
    """Cell of t; cells are left-closed except the last"""
    return np.minimum((np.asarray(t, dtype=float) * k).astype(int), k - 1)


def _permutation_corner_mass(sigma: Permutation, k: int, a: Fraction, b: Fraction) -> Fraction:
    """k λ(S_σ ∩ [0,a]×[0,b]) through the floor formula"""
    ka = k * a
    full = math.floor(ka)
    total = sum((cell_overlap(k, sigma[j], b) for j in range(min(full, k))), Fraction(0))
    frac = ka - full
    if frac and full < k:
        total += frac * cell_overlap(k, sigma[full], b)
    return total


def corner_coefficients(perms: Sequence[Permutation], k: int, a: float, b: float) -> np.ndarray:
    """c_i with P_f([0,a]×[0,b]) = Σ U_i c_i, computed exactly then rounded"""
    fa, fb = Fraction(a), Fraction(b)
    return np.array([float(_permutation_corner_mass(sigma, k, fa, fb)) for sigma in perms])


def _box_from_corners(corner, rect: Rectangle):
    return corner(rect.x1, rect.y1) - corner(rect.x0, rect.y1) - corner(rect.x1, rect.y0) + corner(rect.x0, rect.y0)


def rectangle_coefficients(perms: Sequence[Permutation], k: int, rect: Rectangle) -> np.ndarray:
    """c_i(H) with P_f(H) = Σ U_i c_i(H) for every mixture over `perms`"""
    return _box_from_corners(lambda a, b: corner_coefficients(perms, k, a, b), rect)


@dataclass(frozen=True)
class PermDensity:
    """f_σ = k 1_{S_σ}, uniform on S_σ = ∪_j I_j × I_σ(j)"""
    k: int
    sigma: Permutation

    def __post_init__(self):
        object.__setattr__(self, "sigma", _check_permutation(self.sigma, self.k))

    def density(self, x, y) -> np.ndarray:
        sigma = np.asarray(self.sigma)
        return np.where(sigma[cell_index(x, self.k)] == cell_index(y, self.k), float(self.k), 0.0)

    def contains(self, x, y) -> np.ndarray:
        return np.asarray(self.sigma)[cell_index(x, self.k)] == cell_index(y, self.k)

    def corner_prob(self, a: float, b: float) -> float:
        return float(_permutation_corner_mass(self.sigma, self.k, Fraction(a), Fraction(b)))


@dataclass(frozen=True, eq=False)
class CheckerboardDensity:
    """g(x,y) = Σ d_{j,h} 1_{I_j}(x) 1_{I_h}(y) with unit row and column averages"""
    d: np.ndarray
    tol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        d = np.array(self.d, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InvalidMeasureError(f"Checkerboard matrix must be square, got {d.shape}")
        if np.any(d < 0):
            raise InvalidMeasureError("Checkerboard matrix must be non-negative")
        k = d.shape[0]
        if np.max(np.abs(d.sum(axis=1) / k - 1)) > self.tol or np.max(np.abs(d.sum(axis=0) / k - 1)) > self.tol:
            raise InvalidMeasureError("Checkerboard row and column averages must equal 1")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def k(self) -> int:
        return self.d.shape[0]

    def density(self, x, y) -> np.ndarray:
        return self.d[cell_index(x, self.k), cell_index(y, self.k)]

    def corner_prob(self, a: float, b: float) -> float:
        k = self.k
        fa, fb = Fraction(a), Fraction(b)
        ox = np.array([float(cell_overlap(k, j, fa)) for j in range(k)])
        oy = np.array([float(cell_overlap(k, h, fb)) for h in range(k)])
        return float(ox @ self.d @ oy)

    def rectangle_prob(self, rect: Rectangle) -> float:
        return float(_box_from_corners(self.corner_prob, rect))

    def to_grid(self, n: Optional[int] = None) -> Grid2D:
        """P_g written as a piecewise-uniform measure on an n×n grid"""
        n = n or self.k
        overlap = overlap_matrix(self.k, n)
        mass = overlap.T @ self.d @ overlap
        return Grid2D(mass / mass.sum())

    def cdf_grid(self) -> np.ndarray:
        """(k+1)×(k+1) values of the distribution function at the cell corners"""
        cdf = np.zeros((self.k + 1, self.k + 1))
        cdf[1:, 1:] = np.cumsum(np.cumsum(self.d, axis=0), axis=1) / self.k ** 2
        return cdf

    def to_dict(self) -> Dict[str, Any]:
        return {"k": self.k, "d": self.d.tolist()}


@dataclass(frozen=True, eq=False)
class CheckerboardMixture:
    """f = Σ U_i f_{σ_i} on a k×k grid"""
    k: int
    perms: Tuple[Permutation, ...]
    weights: np.ndarray

    def __post_init__(self):
        perms = tuple(_check_permutation(sigma, self.k) for sigma in self.perms)
        if len(set(perms)) != len(perms):
            raise InvalidMeasureError("Mixture permutations must be distinct")
        weights = np.asarray(self.weights, dtype=float).ravel()
        if weights.size != len(perms):
            raise InvalidMeasureError(f"{weights.size} weights for {len(perms)} permutations")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise InvalidMeasureError("Mixture weights must lie on the simplex")
        weights.setflags(write=False)
        object.__setattr__(self, "perms", perms)
        object.__setattr__(self, "weights", weights)

    @property
    def m(self) -> int:
        return len(self.perms)

    def doubly_stochastic(self) -> np.ndarray:
        """D_{j,h} = Σ_{i: σ_i(j) = h} U_i"""
        D = np.zeros((self.k, self.k))
        rows = np.arange(self.k)
        for u, sigma in zip(self.weights, self.perms):
            D[rows, sigma] += u
        return D

    def density(self, x, y) -> np.ndarray:
        D = self.doubly_stochastic()
        return self.k * D[cell_index(x, self.k), cell_index(y, self.k)]

    def membership(self, x, y) -> np.ndarray:
        """(n, m) boolean matrix: Z_i ∈ S_{σ_j}"""
        ix = cell_index(x, self.k)
        iy = cell_index(y, self.k)
        perms = np.asarray(self.perms)
        return perms[:, ix].T == iy[:, None]

    def corner_prob(self, a: float, b: float) -> float:
        return rectangle_prob(self, a, b)

    def rectangle_prob(self, rect: Rectangle) -> float:
        return float(_box_from_corners(self.corner_prob, rect))

    def sample_points(self, n: int, rng: np.random.Generator):
        """Exact sampling: a cell with probability D_{j,h}/k, then uniform inside it"""
        probs = (self.doubly_stochastic() / self.k).ravel()
        cells = rng.choice(probs.size, size=n, p=probs / probs.sum())
        j, h = np.divmod(cells, self.k)
        x = (j + rng.random(n)) / self.k
        y = (h + rng.random(n)) / self.k
        return x, y

    def to_dict(self) -> Dict[str, Any]:
        return {"k": self.k, "perms": [list(s) for s in self.perms], "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CheckerboardMixture":
        return cls(int(data["k"]), tuple(tuple(s) for s in data["perms"]), np.asarray(data["weights"]))


def rectangle_prob(mix: CheckerboardMixture, a: float, b: float) -> float:
    """
    P_f([0,a]×[0,b]) = Σ U_i { Σ_{j<[ka]} m(I_σi(j) ∩ [0,b]) + (ka-[ka]) m(I_σi([ka]) ∩ [0,b]) }

    Overlaps and weights are combined as exact rationals before rounding.
    """
    if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
        raise InvalidParameterError(f"Corner ({a}, {b}) must lie in [0,1]^2")
    fa, fb = Fraction(a), Fraction(b)
    total = sum(
        (Fraction(float(u)) * _permutation_corner_mass(sigma, mix.k, fa, fb) for u, sigma in zip(mix.weights, mix.perms)),
        Fraction(0),
    )
    return float(total)


def integer_grid_prob(mix: CheckerboardMixture, a: float, b: float) -> float:
    """(1/k) Σ U_i card{j < ka : σ_i(j) < kb}, for ka and kb integers"""
    ka, kb = round(mix.k * a), round(mix.k * b)
    if not (math.isclose(ka, mix.k * a) and math.isclose(kb, mix.k * b)):
        raise InvalidParameterError("integer_grid_prob needs ka and kb to be integers")
    counts = [sum(1 for j in range(ka) if sigma[j] < kb) for sigma in mix.perms]
    return float(sum(Fraction(float(u)) * c for u, c in zip(mix.weights, counts)) / mix.k)


def to_matrix(mix: CheckerboardMixture) -> CheckerboardDensity:
    """d = k D"""
    return CheckerboardDensity(mix.k * mix.doubly_stochastic())


def project_coupling(p: Grid2D, k: int, tol: float = 1e-10) -> CheckerboardDensity:
    """
    d_{j,h} = k^2 p(I_j × I_h) for p ∈ Γ(m,m). The projection matches p on
    every k-cell, and d_BL(p, P_g) <= 2√2/k.
    """
    if k < 1:
        raise InvalidParameterError(f"k must be a positive integer, got {k}")
    if p.k_x != p.k_y or not has_marginals(p, Grid1D.uniform(p.k_x), Grid1D.uniform(p.k_y), tol=tol):
        raise InvalidMeasureError("project_coupling needs a coupling with uniform marginals")
    coarse = p.regrid(k, k).mass
    return CheckerboardDensity(k * k * coarse, tol=max(tol, 1e-9))


def approximation_bound(k: int) -> float:
    return 2.0 * math.sqrt(2.0) / k


def approximation_sweep(p: Grid2D, ks: Sequence[int], metric_scale: float = 1.0,
                        workers: Optional[int] = None) -> List[Dict[str, float]]:
    """(k, d_BL(p, P_g), 2√2/k) rows for each resolution, in the order of ks"""
    def one_k(k: int) -> float:
        g = project_coupling(p, k)
        return bl_distance_refined(p, g.to_grid(k), metric_scale=metric_scale)

    workers = int(workers or get_setting("N_WORKERS", 1))
    if workers <= 1 or len(ks) <= 1:
        distances = [one_k(k) for k in ks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            distances = list(executor.map(one_k, ks))

    rows = []
    for k, distance in zip(ks, distances):
        rows.append({"k": int(k), "d_bl": distance, "bound": approximation_bound(k)})
        logger.info(f"k={k}: d_BL={distance:.6f}, bound={approximation_bound(k):.6f}")
    return rows


def comonotone_coupling(n: int) -> Grid2D:
    """Mass 1/n on each diagonal cell"""
    return Grid2D(np.eye(n) / n)


def random_coupling(n: int, rng: np.random.Generator, n_perms: int = 5) -> Grid2D:
    """Random element of Γ(m,m) on an n×n grid: a Dirichlet mixture of permutation matrices"""
    weights = rng.dirichlet(np.ones(n_perms))
    mass = np.zeros((n, n))
    for u in weights:
        mass[np.arange(n), rng.permutation(n)] += u / n
    return Grid2D(mass / mass.sum())


@dataclass(frozen=True)
class KLaw:
    """Truncated geometric law on {1, ..., k_max}"""
    k_max: int = 8
    p: float = 0.5

    def __post_init__(self):
        if self.k_max < 1 or not 0.0 < self.p <= 1.0:
            raise InvalidParameterError(f"Invalid K law: k_max={self.k_max}, p={self.p}")

    def probabilities(self) -> np.ndarray:
        k = np.arange(1, self.k_max + 1)
        probs = self.p * (1 - self.p) ** (k - 1)
        return probs / probs.sum()

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.choice(np.arange(1, self.k_max + 1), p=self.probabilities()))


def sample_dirichlet(alphas: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Gamma normalization: G_i ~ Gamma(α_i, 1), U = G / Σ G"""
    gammas = rng.standard_gamma(alphas)
    total = gammas.sum()
    if total <= 0:
        # All gammas underflowed (tiny α); fall back to the largest parameter
        out = np.zeros_like(alphas)
        out[np.argmax(alphas)] = 1.0
        return out
    return gammas / total


def _random_permutations(k: int, count: int, rng: np.random.Generator) -> List[Permutation]:
    if k <= get_setting("FULL_PERMUTATION_MAX_K", 6) and count >= math.factorial(k):
        return all_permutations(k)
    count = min(count, math.factorial(k))
    chosen = {}
    while len(chosen) < count:
        sigma = tuple(int(s) for s in rng.permutation(k))
        chosen.setdefault(sigma, None)
    return list(chosen)


def sample_mixture(
    perms: Optional[Sequence[Sequence[int]]],
    dirichlet_alphas,
    seed: SeedLike = None,
    k_law: Optional[KLaw] = None,
    rng: Optional[np.random.Generator] = None,
    k: Optional[int] = None,
) -> CheckerboardMixture:
    """
    U ~ Dir(α) over the given permutations. With a K law, K is drawn first and
    the mixture is built at resolution K: all K! permutations for small K,
    otherwise `len(alphas)` distinct random ones (at most K!). The K law needs
    perms=None and a symmetric α; both are checked.
    """
    rng = rng or make_rng(seed)
    alphas = np.atleast_1d(np.asarray(dirichlet_alphas, dtype=float))
    if np.any(alphas <= 0):
        raise InvalidParameterError(f"Dirichlet parameters must be positive, got {alphas}")

    if k_law is not None:
        if perms is not None:
            raise InvalidParameterError("With a K law the permutations are drawn at the sampled resolution; pass perms=None")
        if np.any(alphas != alphas[0]):
            raise InvalidParameterError(f"A K law needs a symmetric Dirichlet parameter, got {alphas}")
        k = k_law.sample(rng)
        n_perms = alphas.size if alphas.size > 1 else math.factorial(min(k, get_setting("FULL_PERMUTATION_MAX_K", 6)))
        perm_list = _random_permutations(k, n_perms, rng)
        alphas = np.full(len(perm_list), alphas[0])
    else:
        if perms is None:
            if k is None:
                raise InvalidParameterError("Pass perms, k or a K law")
            perm_list = all_permutations(k)
            if alphas.size == 1:
                alphas = np.full(len(perm_list), alphas[0])
        else:
            perm_list = [tuple(s) for s in perms]
        if not perm_list:
            raise InvalidParameterError("At least one permutation is required")
        k = len(perm_list[0])
        if alphas.size != len(perm_list):
            raise InvalidParameterError(f"{alphas.size} Dirichlet parameters for {len(perm_list)} permutations")

    weights = sample_dirichlet(alphas, rng)
    return CheckerboardMixture(k, tuple(perm_list), weights)


@dataclass(frozen=True, eq=False)
class CheckerboardPrior:
    """(U_1..U_m) ~ Dir(α_1..α_m) over a fixed permutation list"""
    k: int
    perms: Tuple[Permutation, ...]
    alphas: np.ndarray

    def __post_init__(self):
        perms = tuple(_check_permutation(s, self.k) for s in self.perms)
        if len(set(perms)) != len(perms):
            raise InvalidParameterError("Prior permutations must be distinct")
        alphas = np.asarray(self.alphas, dtype=float).ravel()
        if alphas.size == 1 and len(perms) > 1:
            alphas = np.full(len(perms), alphas[0])
        if alphas.size != len(perms) or np.any(alphas <= 0):
            raise InvalidParameterError("Need one positive Dirichlet parameter per permutation")
        object.__setattr__(self, "perms", perms)
        object.__setattr__(self, "alphas", alphas)

    @classmethod
    def full(cls, k: int, alpha: float = 1.0) -> "CheckerboardPrior":
        perms = all_permutations(k)
        return cls(k, tuple(perms), np.full(len(perms), alpha))

    @property
    def m(self) -> int:
        return len(self.perms)

    def sample(self, rng: np.random.Generator) -> CheckerboardMixture:
        return CheckerboardMixture(self.k, self.perms, sample_dirichlet(self.alphas, rng))

    def mean_mixture(self) -> CheckerboardMixture:
        return CheckerboardMixture(self.k, self.perms, self.alphas / self.alphas.sum())

    def to_dict(self) -> Dict[str, Any]:
        return {"family": "checkerboard", "k": self.k, "perms": [list(s) for s in self.perms],
                "alphas": self.alphas.tolist()}


@dataclass(frozen=True)
class RandomResolutionPrior:
    """K from a K law, then a symmetric Dirichlet mixture at resolution K"""
    k_law: KLaw
    alpha: float = 1.0
    n_perms: Optional[int] = None

    def sample(self, rng: np.random.Generator) -> CheckerboardMixture:
        alphas = [self.alpha] * self.n_perms if self.n_perms else [self.alpha]
        return sample_mixture(None, alphas, k_law=self.k_law, rng=rng)
