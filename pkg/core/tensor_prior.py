"""
Random tensor densities f(x,y) = 1 + Σ_n U_n g_n(x) h_n(y) on [0,1]^2
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from core.basis import BasisPair, haar_basis
from core.sampling import rejection_sample
from models.grid import Grid1D, Rectangle
from utils.error_handling import InvalidMeasureError, InvalidParameterError
from utils.random_streams import SeedLike, make_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VLaw:
    """Law of a bounded variable V with |V| <= 1"""
    sample: Callable[[np.random.Generator, Tuple[int, ...]], np.ndarray]
    char_function: Callable[[np.ndarray], np.ndarray]


V_LAWS: Dict[str, VLaw] = {
    "uniform": VLaw(lambda rng, shape: rng.uniform(-1.0, 1.0, shape), lambda s: np.sinc(np.asarray(s) / np.pi)),
    "rademacher": VLaw(lambda rng, shape: rng.choice([-1.0, 1.0], size=shape), lambda s: np.cos(s)),
    "zero": VLaw(lambda rng, shape: np.zeros(shape), lambda s: np.ones_like(np.asarray(s, dtype=float))),
}


@dataclass(frozen=True, eq=False)
class CoeffLaw:
    """
    Coefficients U_n = V_n * w_n with |V_n| <= 1 and Σ w_n <= 1, so that
    Σ|U_n| <= 1 holds for every draw.

    common=True shares a single V across all n; the coefficients are then
    dependent and the characteristic-function product does not apply.
    """
    scales: np.ndarray
    v_law: str = "uniform"
    common: bool = False

    def __post_init__(self):
        scales = np.asarray(self.scales, dtype=float)
        if np.any(scales < 0) or scales.sum() > 1.0 + 1e-12:
            raise InvalidParameterError(f"Coefficient scales must be non-negative with sum <= 1, got sum {scales.sum()}")
        if self.v_law not in V_LAWS:
            raise InvalidParameterError(f"Unknown coefficient law '{self.v_law}', choose from {sorted(V_LAWS)}")
        object.__setattr__(self, "scales", scales)

    @classmethod
    def geometric(cls, n_terms: int, v_law: str = "uniform", common: bool = False) -> "CoeffLaw":
        """w_n = 2^-n, n = 1..n_terms"""
        return cls(0.5 ** np.arange(1, n_terms + 1), v_law=v_law, common=common)

    @property
    def independent(self) -> bool:
        return not self.common

    @property
    def n_terms(self) -> int:
        return self.scales.size

    def sample_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """(size, n_terms) coefficient draws"""
        draw = V_LAWS[self.v_law].sample
        v = draw(rng, (size, 1)) if self.common else draw(rng, (size, self.n_terms))
        return v * self.scales

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.sample_batch(rng, 1)[0]

    def term_char_function(self, s: np.ndarray) -> np.ndarray:
        """φ_n(s_n) = E exp(i s_n U_n), elementwise"""
        return V_LAWS[self.v_law].char_function(self.scales[: np.shape(s)[-1]] * s)

    def to_dict(self):
        return {"scales": self.scales.tolist(), "v_law": self.v_law, "common": self.common}


@dataclass(frozen=True, eq=False)
class TensorDensity:
    """f(x,y) = 1 + Σ U_n g_n(x) h_n(y), a density with respect to λ = μ × ν"""
    basis: Tuple[BasisPair, ...]
    coeffs: np.ndarray
    mu: Grid1D
    nu: Grid1D
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float).ravel()
        basis = tuple(self.basis)
        if coeffs.size != len(basis):
            raise InvalidMeasureError(f"{coeffs.size} coefficients for {len(basis)} basis pairs")
        if np.abs(coeffs).sum() > 1.0 + 1e-12:
            raise InvalidMeasureError(f"Σ|U_n| = {np.abs(coeffs).sum():.6g} exceeds 1")
        if self.validate:
            for pair in basis:
                pair.validate(self.mu, self.nu)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "basis", basis)

    def density(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        total = np.ones(np.broadcast(x, y).shape)
        for u, pair in zip(self.coeffs, self.basis):
            total = total + u * pair.g(x) * pair.h(y)
        return total

    def coefficients(self, rect: Rectangle) -> np.ndarray:
        """a_n(H) for every basis pair"""
        return np.array([pair.coefficient(rect, self.mu, self.nu) for pair in self.basis])

    def rectangle_prob(self, rect: Rectangle) -> float:
        return rectangle_prob(self, rect)

    def sample_points(self, n: int, rng: np.random.Generator):
        # f <= 2 because |g_n|, |h_n| <= 1 and Σ|U_n| <= 1
        return rejection_sample(self.density, self.mu, self.nu, n, rng, bound=2.0)

    def is_member(self, points: int = 512, tol: float = 1e-6) -> bool:
        """f >= 0 on a points × points midpoint grid and quadrature marginals equal to μ and ν"""
        t = (np.arange(points) + 0.5) / points
        gx, gy = np.meshgrid(t, t, indexing="ij")
        if np.min(self.density(gx, gy)) < -1e-12:
            return False
        edges = np.linspace(0.0, 1.0, 9)
        for lo, hi in zip(edges[:-1], edges[1:]):
            row = self.rectangle_prob(Rectangle(lo, hi, 0.0, 1.0))
            col = self.rectangle_prob(Rectangle(0.0, 1.0, lo, hi))
            if abs(row - self.mu.interval_mass(lo, hi)) > tol or abs(col - self.nu.interval_mass(lo, hi)) > tol:
                return False
        return True


def rectangle_prob(f: TensorDensity, rect: Rectangle) -> float:
    """P_f(H) = λ(H) + Σ a_n(H) U_n"""
    base = rect.product_mass(f.mu, f.nu)
    if not f.basis:
        return base
    return float(base + np.dot(f.coefficients(rect), f.coeffs))


def char_function(law: CoeffLaw, basis: Sequence[BasisPair], rect: Rectangle, t, mu: Grid1D, nu: Grid1D):
    """
    E exp(i t P_f(H)) = exp(i λ(H) t) Π_n φ_n(a_n(H) t), valid for independent U_n.
    """
    if not law.independent:
        raise InvalidParameterError("Characteristic-function product needs independent coefficients")
    if len(basis) > law.n_terms:
        raise InvalidParameterError(f"Coefficient law has {law.n_terms} terms for {len(basis)} basis pairs")

    t_arr = np.asarray(t, dtype=float)
    lam = rect.product_mass(mu, nu)
    a = np.array([pair.coefficient(rect, mu, nu) for pair in basis])
    value = np.exp(1j * lam * t_arr)
    if a.size:
        terms = law.term_char_function(np.multiply.outer(t_arr, a))
        value = value * np.prod(terms, axis=-1)
    return complex(value) if t_arr.ndim == 0 else value


def empirical_char_function(
    law: CoeffLaw,
    basis: Sequence[BasisPair],
    rect: Rectangle,
    t_values: Sequence[float],
    mu: Grid1D,
    nu: Grid1D,
    n_samples: int,
    seed: SeedLike = None,
):
    """
    Monte Carlo estimate of E exp(i t P_f(H)) with standard errors of the
    real and imaginary parts.
    """
    rng = make_rng(seed)
    lam = rect.product_mass(mu, nu)
    a = np.array([pair.coefficient(rect, mu, nu) for pair in basis])
    coeffs = law.sample_batch(rng, n_samples)[:, : a.size]
    probs = lam + coeffs @ a if a.size else np.full(n_samples, lam)

    t_arr = np.asarray(t_values, dtype=float)
    phase = np.multiply.outer(t_arr, probs)
    values = np.cos(phase).mean(axis=1) + 1j * np.sin(phase).mean(axis=1)
    se_real = np.cos(phase).std(axis=1, ddof=1) / np.sqrt(n_samples)
    se_imag = np.sin(phase).std(axis=1, ddof=1) / np.sqrt(n_samples)
    return values, se_real, se_imag


def sample_density(
    law: CoeffLaw,
    basis: Sequence[BasisPair],
    seed: SeedLike = None,
    mu: Optional[Grid1D] = None,
    nu: Optional[Grid1D] = None,
    rng: Optional[np.random.Generator] = None,
) -> TensorDensity:
    """Draw U from the coefficient law and build the random density"""
    mu = mu or Grid1D.uniform()
    nu = nu or Grid1D.uniform()
    if len(basis) > law.n_terms:
        raise InvalidParameterError(f"Coefficient law has {law.n_terms} terms for {len(basis)} basis pairs")
    rng = rng or make_rng(seed)
    coeffs = law.sample(rng)[: len(basis)] if basis else np.empty(0)
    return TensorDensity(tuple(basis), coeffs, mu, nu)


@dataclass(frozen=True, eq=False)
class TensorPrior:
    """Law of a random tensor density; the basis is checked once"""
    basis: Tuple[BasisPair, ...]
    law: CoeffLaw
    mu: Grid1D
    nu: Grid1D

    def __post_init__(self):
        if len(self.basis) > self.law.n_terms:
            raise InvalidParameterError(f"Coefficient law has {self.law.n_terms} terms for {len(self.basis)} basis pairs")
        for pair in self.basis:
            pair.validate(self.mu, self.nu)
        object.__setattr__(self, "basis", tuple(self.basis))

    @classmethod
    def haar(cls, n_terms: int, mu: Optional[Grid1D] = None, nu: Optional[Grid1D] = None,
             v_law: str = "uniform", common: bool = False) -> "TensorPrior":
        mu = mu or Grid1D.uniform()
        nu = nu or Grid1D.uniform()
        basis = tuple(haar_basis(mu, nu, n_terms))
        return cls(basis, CoeffLaw.geometric(len(basis), v_law=v_law, common=common), mu, nu)

    def sample(self, rng: np.random.Generator) -> TensorDensity:
        coeffs = self.law.sample(rng)[: len(self.basis)] if self.basis else np.empty(0)
        return TensorDensity(self.basis, coeffs, self.mu, self.nu, validate=False)

    def mean_rectangle_prob(self, rect: Rectangle) -> float:
        """E P_f(H) = λ(H) when the V law is symmetric"""
        return rect.product_mass(self.mu, self.nu)

    def char_function(self, rect: Rectangle, t):
        return char_function(self.law, self.basis, rect, t, self.mu, self.nu)
