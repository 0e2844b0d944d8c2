"""
Bivariate copulas on [0,1]^2 and the section inverse r(u, a) = sup{v : C(u, v) = a}
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Protocol

import numpy as np

from config.settings import get_setting
from core.checkerboard_prior import CheckerboardDensity, CheckerboardMixture, CheckerboardPrior, to_matrix
from utils.error_handling import InvalidMeasureError, InvalidParameterError, SolverError

logger = logging.getLogger(__name__)


class Copula(Protocol):
    def __call__(self, u, v) -> np.ndarray: ...


@dataclass(frozen=True)
class ProductCopula:
    """C(u, v) = u v"""

    def __call__(self, u, v) -> np.ndarray:
        return np.asarray(u, dtype=float) * np.asarray(v, dtype=float)

    def to_dict(self) -> Dict[str, Any]:
        return {"copula": "product"}


@dataclass(frozen=True, eq=False)
class GridCopula:
    """
    Bilinear interpolation of copula values on the (k+1)×(k+1) corner grid
    u_i = i/k, v_j = j/k. Exact for checkerboard copulas.
    """
    values: np.ndarray
    tol: float = field(default=None, repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        tol = get_setting("SECTION_CHECK_TOLERANCE", 1e-10) if self.tol is None else self.tol
        if values.ndim != 2 or values.shape[0] != values.shape[1] or values.shape[0] < 2:
            raise InvalidMeasureError(f"Copula grid must be square with at least 2 points per side, got {values.shape}")
        t = np.linspace(0.0, 1.0, values.shape[0])
        if np.max(np.abs(values[0, :])) > tol or np.max(np.abs(values[:, 0])) > tol:
            raise InvalidMeasureError("Copula must vanish on the lower and left edges")
        if np.max(np.abs(values[:, -1] - t)) > tol or np.max(np.abs(values[-1, :] - t)) > tol:
            raise InvalidMeasureError("Copula must have uniform marginals: C(u,1) = u and C(1,v) = v")
        # 2-increasing: every cell gets non-negative mass
        if np.min(np.diff(np.diff(values, axis=0), axis=1)) < -tol:
            raise InvalidMeasureError("Copula grid is not 2-increasing")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "tol", tol)

    @property
    def k(self) -> int:
        return self.values.shape[0] - 1

    @classmethod
    def from_checkerboard(cls, g: CheckerboardDensity) -> "GridCopula":
        return cls(g.cdf_grid())

    @classmethod
    def from_mixture(cls, mix: CheckerboardMixture) -> "GridCopula":
        return cls.from_checkerboard(to_matrix(mix))

    def __call__(self, u, v) -> np.ndarray:
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        v = np.clip(np.asarray(v, dtype=float), 0.0, 1.0)
        k = self.k
        i = np.minimum((u * k).astype(int), k - 1)
        j = np.minimum((v * k).astype(int), k - 1)
        s = u * k - i
        t = v * k - j
        c = self.values
        return (
            (1 - s) * (1 - t) * c[i, j]
            + s * (1 - t) * c[i + 1, j]
            + (1 - s) * t * c[i, j + 1]
            + s * t * c[i + 1, j + 1]
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"copula": "grid", "k": self.k, "values": self.values.tolist()}


def copula_from_dict(data: Dict[str, Any]) -> Copula:
    """Product, a raw corner grid, a checkerboard matrix or a checkerboard mixture"""
    kind = data.get("copula")
    if kind == "product":
        return ProductCopula()
    if "values" in data:
        return GridCopula(np.asarray(data["values"], dtype=float))
    if "perms" in data:
        return GridCopula.from_mixture(CheckerboardMixture.from_dict(data))
    if "d" in data:
        return GridCopula.from_checkerboard(CheckerboardDensity(np.asarray(data["d"], dtype=float)))
    raise InvalidParameterError(f"Unrecognized copula document with keys {sorted(data)}")


def section_inverse(C: Copula, u: float, a, tol: float = None, check_tol: float = None) -> np.ndarray:
    """
    r(u, a) = sup{v : C(u, v) = a} for a ∈ [0, u], by bisection on the
    rightmost v with C(u, v) <= a. Vectorized over a.
    """
    tol = get_setting("BISECTION_TOLERANCE", 1e-12) if tol is None else tol
    check_tol = get_setting("SECTION_CHECK_TOLERANCE", 1e-10) if check_tol is None else check_tol
    a = np.asarray(a, dtype=float)
    if np.any(a < 0) or np.any(a > u):
        raise InvalidParameterError(f"a must lie in [0, {u}]")

    lo = np.zeros(a.shape)
    hi = np.ones(a.shape)
    full = C(u, 1.0) <= a
    while np.max(hi - lo, initial=0.0) > tol:
        mid = 0.5 * (lo + hi)
        below = C(u, mid) <= a
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    r = np.where(full, 1.0, lo)

    gap = np.abs(C(u, r) - a)
    if np.max(gap, initial=0.0) > check_tol:
        raise SolverError(f"Section inverse missed its level by {np.max(gap):.3g}")
    return r if r.ndim else float(r)


@dataclass(frozen=True, eq=False)
class CheckerboardCopulaPrior:
    """Random copula: the distribution function of a checkerboard prior draw"""
    prior: CheckerboardPrior

    def sample(self, rng: np.random.Generator) -> GridCopula:
        return GridCopula.from_mixture(self.prior.sample(rng))


@dataclass(frozen=True, eq=False)
class FiniteCopulaMixture:
    """Π_C = Σ w_i δ_{C_i}"""
    copulas: tuple
    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        if weights.size != len(self.copulas) or np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise InvalidParameterError("Copula mixture weights must lie on the simplex")
        object.__setattr__(self, "weights", weights)

    def sample(self, rng: np.random.Generator) -> Copula:
        return self.copulas[int(rng.choice(len(self.copulas), p=self.weights))]
