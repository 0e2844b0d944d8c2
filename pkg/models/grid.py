"""
Grid models for discretized probability measures on [0,1] and [0,1]^2

Continuous measures are piecewise uniform: cell i of an n-cell grid is
[i/n, (i+1)/n] and carries mass weights[i] spread uniformly over it.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Optional, Tuple

import numpy as np

from config.settings import get_setting
from utils.error_handling import InvalidMeasureError, InvalidParameterError


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


def _tolerance(tol: Optional[float]) -> float:
    return get_setting("MEASURE_TOLERANCE", 1e-12) if tol is None else tol


def overlap_matrix(n_source: int, n_target: int) -> np.ndarray:
    """
    O[a, i] = length of (source cell a) ∩ (target cell i) on [0,1].

    Re-gridding a piecewise-uniform density is O^T (density * area) O.
    """
    src = np.linspace(0.0, 1.0, n_source + 1)
    tgt = np.linspace(0.0, 1.0, n_target + 1)
    lo = np.maximum(src[:-1, None], tgt[None, :-1])
    hi = np.minimum(src[1:, None], tgt[None, 1:])
    return np.clip(hi - lo, 0.0, None)


def interval_overlap(n_cells: int, lo: float, hi: float) -> np.ndarray:
    """Fraction of each of the n cells covered by [lo, hi]"""
    edges = np.linspace(0.0, 1.0, n_cells + 1)
    covered = np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0.0, None)
    return covered * n_cells


@dataclass(frozen=True, eq=False)
class Grid1D:
    """Piecewise-uniform probability measure on [0,1]"""
    weights: np.ndarray
    tol: Optional[float] = field(default=None, repr=False)

    def __post_init__(self):
        weights = _frozen(np.ravel(self.weights))
        if weights.size == 0:
            raise InvalidMeasureError("Grid1D needs at least one cell")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise InvalidMeasureError("Grid1D weights must be finite and non-negative")
        if abs(weights.sum() - 1.0) > _tolerance(self.tol):
            raise InvalidMeasureError(f"Grid1D weights sum to {weights.sum():.15g}, not 1")
        object.__setattr__(self, "weights", weights)

    @property
    def n_cells(self) -> int:
        return self.weights.size

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_cells + 1)

    @classmethod
    def uniform(cls, n_cells: Optional[int] = None) -> "Grid1D":
        """Lebesgue measure on [0,1] on an n-cell grid"""
        n_cells = n_cells or get_setting("GRID_RESOLUTION", 256)
        return cls(np.full(n_cells, 1.0 / n_cells))

    @classmethod
    def from_weights(cls, weights: Iterable[float], normalize: bool = False) -> "Grid1D":
        weights = np.asarray(list(weights), dtype=float)
        if normalize:
            total = weights.sum()
            if total <= 0:
                raise InvalidMeasureError("Cannot normalize weights with non-positive total")
            weights = weights / total
        return cls(weights)

    def cumulative(self) -> np.ndarray:
        """Distribution function at the cell edges (length n_cells + 1)"""
        values = np.minimum(np.concatenate([[0.0], np.cumsum(self.weights)]), 1.0)
        values[-1] = 1.0
        return values

    def cdf_at(self, t) -> np.ndarray:
        """F(t) = mass of [0, t]; linear inside cells"""
        return np.interp(t, self.edges, self.cumulative(), left=0.0, right=1.0)

    def interval_mass(self, lo: float, hi: float) -> float:
        """Mass of (lo, hi]"""
        if hi <= lo:
            return 0.0
        return float(self.cdf_at(hi) - self.cdf_at(lo))

    def cell_index(self, t) -> np.ndarray:
        """Cell containing t; cells are left-closed except the last"""
        return np.minimum((np.asarray(t) * self.n_cells).astype(int), self.n_cells - 1)

    def density(self, t) -> np.ndarray:
        """Density with respect to Lebesgue measure"""
        return self.weights[self.cell_index(t)] * self.n_cells

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw points: cell by weight, then uniform inside the cell"""
        cells = rng.choice(self.n_cells, size=size, p=self.weights)
        return (cells + rng.random(size)) / self.n_cells

    def mean_of(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))

    def to_dict(self) -> Dict[str, Any]:
        return {"n_cells": self.n_cells, "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Grid1D":
        grid = cls(np.asarray(data["weights"], dtype=float))
        if "n_cells" in data and int(data["n_cells"]) != grid.n_cells:
            raise InvalidMeasureError(f"n_cells={data['n_cells']} does not match {grid.n_cells} weights")
        return grid

    def __eq__(self, other) -> bool:
        return isinstance(other, Grid1D) and np.array_equal(self.weights, other.weights)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Piecewise-uniform probability measure on [0,1]^2 (rows index x, columns y)"""
    mass: np.ndarray
    tol: Optional[float] = field(default=None, repr=False)

    def __post_init__(self):
        mass = _frozen(self.mass)
        if mass.ndim != 2 or mass.size == 0:
            raise InvalidMeasureError(f"Grid2D mass must be a non-empty matrix, got shape {mass.shape}")
        if np.any(mass < 0) or not np.all(np.isfinite(mass)):
            raise InvalidMeasureError("Grid2D mass must be finite and non-negative")
        if abs(mass.sum() - 1.0) > _tolerance(self.tol):
            raise InvalidMeasureError(f"Grid2D mass sums to {mass.sum():.15g}, not 1")
        object.__setattr__(self, "mass", mass)

    @property
    def k_x(self) -> int:
        return self.mass.shape[0]

    @property
    def k_y(self) -> int:
        return self.mass.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.mass.shape

    @classmethod
    def product(cls, mu: Grid1D, nu: Grid1D) -> "Grid2D":
        """λ = μ × ν"""
        return cls(np.outer(mu.weights, nu.weights))

    @classmethod
    def uniform(cls, k_x: int, k_y: Optional[int] = None) -> "Grid2D":
        k_y = k_y or k_x
        return cls(np.full((k_x, k_y), 1.0 / (k_x * k_y)))

    def row_weights(self) -> np.ndarray:
        return self.mass.sum(axis=1)

    def column_weights(self) -> np.ndarray:
        return self.mass.sum(axis=0)

    def cell_centers(self) -> np.ndarray:
        """(k_x * k_y, 2) array of cell centers in row-major order"""
        cx = (np.arange(self.k_x) + 0.5) / self.k_x
        cy = (np.arange(self.k_y) + 0.5) / self.k_y
        gx, gy = np.meshgrid(cx, cy, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])

    def rectangle_prob(self, rect: "Rectangle") -> float:
        """Exact mass of an axis-aligned rectangle"""
        ox = interval_overlap(self.k_x, rect.x0, rect.x1)
        oy = interval_overlap(self.k_y, rect.y0, rect.y1)
        return float(ox @ self.mass @ oy)

    def regrid(self, k_x: int, k_y: Optional[int] = None) -> "Grid2D":
        """The same piecewise-uniform measure written on a k_x × k_y grid"""
        k_y = k_y or k_x
        ox = overlap_matrix(self.k_x, k_x) * self.k_x
        oy = overlap_matrix(self.k_y, k_y) * self.k_y
        mass = ox.T @ self.mass @ oy
        mass = np.clip(mass, 0.0, None)
        return Grid2D(mass / mass.sum())

    def density(self, x, y) -> np.ndarray:
        ix = np.minimum((np.asarray(x) * self.k_x).astype(int), self.k_x - 1)
        iy = np.minimum((np.asarray(y) * self.k_y).astype(int), self.k_y - 1)
        return self.mass[ix, iy] * self.k_x * self.k_y

    def to_dict(self) -> Dict[str, Any]:
        return {"k_x": self.k_x, "k_y": self.k_y, "mass": self.mass.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Grid2D":
        grid = cls(np.asarray(data["mass"], dtype=float))
        if (int(data.get("k_x", grid.k_x)), int(data.get("k_y", grid.k_y))) != grid.shape:
            raise InvalidMeasureError(f"Declared grid {data.get('k_x')}x{data.get('k_y')} does not match mass {grid.shape}")
        return grid

    def __eq__(self, other) -> bool:
        return isinstance(other, Grid2D) and np.array_equal(self.mass, other.mass)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Cdf1D:
    """
    Distribution function stored on knots.

    discrete=False: F is linear between knots (a piecewise-uniform measure).
    discrete=True: F jumps at each knot and is right-continuous (atoms).
    """
    knots: np.ndarray
    values: np.ndarray
    discrete: bool = False

    def __post_init__(self):
        knots = _frozen(self.knots)
        values = _frozen(self.values)
        if knots.shape != values.shape or knots.ndim != 1 or knots.size == 0:
            raise InvalidMeasureError("Cdf1D knots and values must be 1-d arrays of equal length")
        if np.any(np.diff(knots) < 0):
            raise InvalidMeasureError("Cdf1D knots must be sorted")
        if np.any(np.diff(values) < -1e-15) or values[0] < 0 or abs(values[-1] - 1.0) > 1e-12:
            raise InvalidMeasureError("Cdf1D values must be non-decreasing from >= 0 up to 1")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_grid(cls, grid: Grid1D) -> "Cdf1D":
        return cls(grid.edges, grid.cumulative(), discrete=False)

    @classmethod
    def from_atoms(cls, locations, weights) -> "Cdf1D":
        locations = np.asarray(locations, dtype=float)
        weights = np.asarray(weights, dtype=float)
        order = np.argsort(locations, kind="stable")
        values = np.cumsum(weights[order])
        values = values / values[-1]
        return cls(locations[order], values, discrete=True)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if not self.discrete:
            return np.interp(t, self.knots, self.values, left=0.0, right=1.0)
        idx = np.searchsorted(self.knots, t, side="right") - 1
        return np.where(idx >= 0, self.values[np.maximum(idx, 0)], 0.0)

    def support_min(self) -> float:
        """Leftmost point of the support"""
        first = int(np.argmax(self.values > 0))
        if self.discrete or first == 0:
            return float(self.knots[first])
        return float(self.knots[first - 1])

    def to_rows(self):
        return [{"t": float(t), "F": float(v)} for t, v in zip(self.knots, self.values)]


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle [x0, x1] × [y0, y1] inside [0,1]^2"""
    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (0.0 <= self.x0 <= self.x1 <= 1.0 and 0.0 <= self.y0 <= self.y1 <= 1.0):
            raise InvalidParameterError(f"Rectangle {self} is not inside [0,1]^2")

    @classmethod
    def corner(cls, a: float, b: float) -> "Rectangle":
        """[0, a] × [0, b]"""
        return cls(0.0, a, 0.0, b)

    @classmethod
    def full(cls) -> "Rectangle":
        return cls(0.0, 1.0, 0.0, 1.0)

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def product_mass(self, mu: Grid1D, nu: Grid1D) -> float:
        """λ(H) for λ = μ × ν"""
        return mu.interval_mass(self.x0, self.x1) * nu.interval_mass(self.y0, self.y1)

    def contains(self, x, y) -> np.ndarray:
        x = np.asarray(x)
        y = np.asarray(y)
        return (x >= self.x0) & (x <= self.x1) & (y >= self.y0) & (y <= self.y1)

    def to_dict(self) -> Dict[str, float]:
        return {"x0": self.x0, "x1": self.x1, "y0": self.y0, "y1": self.y1}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Rectangle":
        return cls(float(data["x0"]), float(data["x1"]), float(data["y0"]), float(data["y1"]))


@dataclass(frozen=True)
class IntervalSet:
    """Finite union of disjoint left-open right-closed intervals (lo, hi] in [0,1]"""
    intervals: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        cleaned = tuple(sorted((float(lo), float(hi)) for lo, hi in self.intervals))
        for lo, hi in cleaned:
            if not 0.0 <= lo <= hi <= 1.0:
                raise InvalidParameterError(f"Interval ({lo}, {hi}] is not inside [0,1]")
        for (_, prev_hi), (lo, _) in zip(cleaned, cleaned[1:]):
            if lo < prev_hi:
                raise InvalidParameterError("IntervalSet intervals must be disjoint")
        object.__setattr__(self, "intervals", cleaned)

    @classmethod
    def of(cls, *intervals: Tuple[float, float]) -> "IntervalSet":
        return cls(tuple(intervals))

    def measure(self, grid: Grid1D) -> float:
        return sum(grid.interval_mass(lo, hi) for lo, hi in self.intervals)

    def contains(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        inside = np.zeros(t.shape, dtype=bool)
        for lo, hi in self.intervals:
            # [0, hi] when lo == 0 so that the point 0 is not lost
            inside |= ((t > lo) | ((lo == 0.0) & (t >= 0.0))) & (t <= hi)
        return inside

    def to_dict(self) -> Dict[str, Any]:
        return {"intervals": [list(pair) for pair in self.intervals]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "IntervalSet":
        return cls(tuple(tuple(pair) for pair in data["intervals"]))
