"""
Bounded, centered basis functions on [0,1] and their exact integrals
against piecewise-uniform measures
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Protocol, Union

import numpy as np

from models.grid import Grid1D, Rectangle
from utils.error_handling import InvalidMeasureError

logger = logging.getLogger(__name__)

CHECK_POINTS = 4097


class BasisFunction(Protocol):
    def __call__(self, t) -> np.ndarray: ...

    def integrate(self, lo: float, hi: float, measure: Grid1D) -> float: ...

    def sup_abs(self) -> float: ...


def _breakpoints(lo: float, hi: float, *knot_arrays: np.ndarray) -> np.ndarray:
    inner = [k[(k > lo) & (k < hi)] for k in knot_arrays]
    return np.unique(np.concatenate([[lo, hi], *inner]))


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Piecewise-constant function: values[i] on [breaks[i], breaks[i+1])"""
    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        breaks = np.asarray(self.breaks, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if breaks.size != values.size + 1 or breaks[0] != 0.0 or breaks[-1] != 1.0 or np.any(np.diff(breaks) <= 0):
            raise InvalidMeasureError("StepFunction needs increasing breaks from 0 to 1, one more than values")
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "values", values)

    def __call__(self, t) -> np.ndarray:
        idx = np.searchsorted(self.breaks, np.asarray(t, dtype=float), side="right") - 1
        return self.values[np.clip(idx, 0, self.values.size - 1)]

    def integrate(self, lo: float, hi: float, measure: Grid1D) -> float:
        if hi <= lo:
            return 0.0
        pts = _breakpoints(lo, hi, self.breaks, measure.edges)
        mids = 0.5 * (pts[:-1] + pts[1:])
        return float(np.sum(np.diff(pts) * self(mids) * measure.density(mids)))

    def sup_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True, eq=False)
class PiecewiseLinearFunction:
    """Linear interpolation of values on knots 0 = t_0 < ... < t_K = 1"""
    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if knots.shape != values.shape or knots[0] != 0.0 or knots[-1] != 1.0 or np.any(np.diff(knots) <= 0):
            raise InvalidMeasureError("PiecewiseLinearFunction needs increasing knots from 0 to 1")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    def __call__(self, t) -> np.ndarray:
        return np.interp(t, self.knots, self.values)

    def integrate(self, lo: float, hi: float, measure: Grid1D) -> float:
        if hi <= lo:
            return 0.0
        pts = _breakpoints(lo, hi, self.knots, measure.edges)
        mids = 0.5 * (pts[:-1] + pts[1:])
        ends = self(pts)
        return float(np.sum(np.diff(pts) * 0.5 * (ends[:-1] + ends[1:]) * measure.density(mids)))

    def sup_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


Basis = Union[StepFunction, PiecewiseLinearFunction]


@dataclass(frozen=True)
class BasisPair:
    """One term g_n(x) h_n(y) of a tensor density"""
    g: BasisFunction
    h: BasisFunction

    def validate(self, mu: Grid1D, nu: Grid1D, tol: float = 1e-8) -> None:
        """sup|g| <= 1, sup|h| <= 1 and zero means under μ and ν"""
        grid = np.linspace(0.0, 1.0, CHECK_POINTS)
        for name, fn, measure in (("g", self.g, mu), ("h", self.h, nu)):
            sup = max(fn.sup_abs(), float(np.max(np.abs(fn(grid)))))
            if sup > 1.0 + 1e-12:
                raise InvalidMeasureError(f"Basis function {name} has sup|{name}| = {sup:.6g} > 1")
            mean = fn.integrate(0.0, 1.0, measure)
            if abs(mean) > tol:
                raise InvalidMeasureError(f"Basis function {name} has mean {mean:.3g} under its marginal")

    def coefficient(self, rect: Rectangle, mu: Grid1D, nu: Grid1D) -> float:
        """a(H) = ∫_H g(x) h(y) λ(dx, dy); factorizes over the rectangle"""
        return self.g.integrate(rect.x0, rect.x1, mu) * self.h.integrate(rect.y0, rect.y1, nu)


def haar_step(measure: Grid1D, level: int, position: int) -> Optional[StepFunction]:
    """
    Haar-type step with zero mean under `measure`: +α on the left half of the
    dyadic interval, -β on the right half, max(α, β) = 1. None if a half is null.
    """
    width = 1.0 / 2 ** level
    start, mid, end = position * width, (position + 0.5) * width, (position + 1) * width
    m_left = measure.interval_mass(start, mid)
    m_right = measure.interval_mass(mid, end)
    if m_left <= 0 or m_right <= 0:
        return None

    if m_left >= m_right:
        alpha, beta = m_right / m_left, 1.0
    else:
        alpha, beta = 1.0, m_left / m_right

    breaks = [0.0, start, mid, end, 1.0]
    values = [0.0, alpha, -beta, 0.0]
    keep = [i for i in range(4) if breaks[i + 1] > breaks[i]]
    return StepFunction(
        np.array([breaks[keep[0]]] + [breaks[i + 1] for i in keep]),
        np.array([values[i] for i in keep]),
    )


def haar_basis(mu: Grid1D, nu: Grid1D, n_terms: int, max_level: int = 20) -> List[BasisPair]:
    """First n_terms non-degenerate Haar pairs in breadth-first order"""
    pairs: List[BasisPair] = []
    index = 0
    while len(pairs) < n_terms:
        level = int(np.floor(np.log2(index + 1)))
        if level > max_level:
            logger.warning(f"Haar basis stopped at level {max_level} with {len(pairs)} pairs")
            break
        position = index + 1 - 2 ** level
        g = haar_step(mu, level, position)
        h = haar_step(nu, level, position)
        if g is not None and h is not None:
            pairs.append(BasisPair(g, h))
        index += 1
    return pairs


def sign_step() -> StepFunction:
    """+1 on [0, 1/2), -1 on [1/2, 1]"""
    return StepFunction(np.array([0.0, 0.5, 1.0]), np.array([1.0, -1.0]))
