"""
Discretized measures: marginals, distribution functions, quantiles and the
bounded-Lipschitz distance solved as a linear program
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.spatial.distance import cdist

from config.settings import get_setting
from models.grid import Cdf1D, Grid1D, Grid2D
from utils.error_handling import InvalidMeasureError, InvalidParameterError, SolverError

logger = logging.getLogger(__name__)

# Largest support for the explicit potential LP (one constraint per ordered pair)
POTENTIAL_LP_MAX_POINTS = 400


def marginals(p: Grid2D) -> Tuple[Grid1D, Grid1D]:
    """Row-sum and column-sum measures of p"""
    rows = p.row_weights()
    cols = p.column_weights()
    return Grid1D(rows / rows.sum()), Grid1D(cols / cols.sum())


def has_marginals(p: Grid2D, mu: Grid1D, nu: Grid1D, tol: float = 1e-10) -> bool:
    """Γ(μ,ν) membership on the grid"""
    rows, cols = p.row_weights(), p.column_weights()
    if rows.shape != mu.weights.shape or cols.shape != nu.weights.shape:
        return False
    return bool(np.max(np.abs(rows - mu.weights)) <= tol and np.max(np.abs(cols - nu.weights)) <= tol)


def cdf(grid: Grid1D) -> Cdf1D:
    """Distribution function of a piecewise-uniform measure"""
    return Cdf1D.from_grid(grid)


def quantile(F: Cdf1D, u):
    """
    Generalized inverse inf{t : F(t) >= u}.

    u = 0 maps to the leftmost support point. Accepts scalars or arrays.
    """
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr < 0) | (u_arr > 1)) or np.any(np.isnan(u_arr)):
        raise InvalidParameterError(f"Quantile level must lie in [0,1], got {u}")

    values, knots = F.values, F.knots
    idx = np.searchsorted(values, u_arr, side="left")
    idx = np.minimum(idx, values.size - 1)

    if F.discrete:
        result = knots[idx]
    else:
        prev = np.maximum(idx - 1, 0)
        rise = values[idx] - values[prev]
        frac = np.where(rise > 0, (u_arr - values[prev]) / np.where(rise > 0, rise, 1.0), 0.0)
        result = np.where(idx == 0, knots[0], knots[prev] + frac * (knots[idx] - knots[prev]))

    result = np.where(u_arr == 0.0, F.support_min(), result)
    return float(result) if np.ndim(u) == 0 else result


def cdf_rows(F: Cdf1D):
    """Knot rows for CSV export"""
    return F.to_rows()


def common_refinement(p: Grid2D, q: Grid2D) -> Tuple[Grid2D, Grid2D]:
    """Rewrite p and q on the least common refinement of their grids"""
    k_x = math.lcm(p.k_x, q.k_x)
    k_y = math.lcm(p.k_y, q.k_y)
    p_fine = p if p.shape == (k_x, k_y) else p.regrid(k_x, k_y)
    q_fine = q if q.shape == (k_x, k_y) else q.regrid(k_x, k_y)
    return p_fine, q_fine


def _signed_support(p: Grid2D, q: Grid2D):
    if p.shape != q.shape:
        raise InvalidMeasureError(f"bl_distance needs measures on the same grid, got {p.shape} and {q.shape}")
    diff = p.mass.ravel() - q.mass.ravel()
    centers = p.cell_centers()
    return diff, centers


def _ground_cost(a: np.ndarray, b: np.ndarray, metric_scale: float) -> np.ndarray:
    # |φ| <= 1 caps every useful Lipschitz difference at 2
    return np.minimum(metric_scale * cdist(a, b), 2.0)


def _transport_bl(diff: np.ndarray, centers: np.ndarray, metric_scale: float, tol: float) -> float:
    pos = np.flatnonzero(diff > 0)
    neg = np.flatnonzero(diff < 0)
    if pos.size == 0 or neg.size == 0:
        return 0.0

    supply = diff[pos]
    demand = -diff[neg]
    demand = demand * (supply.sum() / demand.sum())
    n_s, n_d = pos.size, neg.size

    cost = _ground_cost(centers[pos], centers[neg], metric_scale).ravel()
    rows = sparse.kron(sparse.identity(n_s, format="csr"), np.ones((1, n_d)), format="csr")
    cols = sparse.kron(np.ones((1, n_s)), sparse.identity(n_d, format="csr"), format="csr")
    a_eq = sparse.vstack([rows, cols], format="csr")
    b_eq = np.concatenate([supply, demand])

    logger.debug(f"BL transport LP: {n_s} sources, {n_d} sinks, {cost.size} variables")
    res = linprog(
        cost,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs",
        options={"primal_feasibility_tolerance": tol, "dual_feasibility_tolerance": tol},
    )
    if res.status != 0:
        raise SolverError(f"BL transport LP failed: {res.message}")
    return float(res.fun)


def _potential_bl(diff: np.ndarray, centers: np.ndarray, metric_scale: float, tol: float) -> float:
    support = np.flatnonzero(diff != 0)
    if support.size == 0:
        return 0.0
    if support.size > POTENTIAL_LP_MAX_POINTS:
        raise InvalidParameterError(
            f"Potential LP limited to {POTENTIAL_LP_MAX_POINTS} support points, got {support.size}; use method='transport'"
        )

    r = diff[support]
    n = support.size
    dist = metric_scale * cdist(centers[support], centers[support])
    i, j = np.nonzero(~np.eye(n, dtype=bool))
    # φ_i - φ_j <= dist_ij for every ordered pair
    data = np.concatenate([np.ones(i.size), -np.ones(i.size)])
    row_ids = np.concatenate([np.arange(i.size), np.arange(i.size)])
    a_ub = sparse.csr_matrix((data, (row_ids, np.concatenate([i, j]))), shape=(i.size, n))

    res = linprog(
        -r,
        A_ub=a_ub,
        b_ub=dist[i, j],
        bounds=(-1.0, 1.0),
        method="highs",
        options={"primal_feasibility_tolerance": tol, "dual_feasibility_tolerance": tol},
    )
    if res.status != 0:
        # φ = 0 is always feasible
        raise SolverError(f"BL potential LP failed: {res.message}")
    return float(-res.fun)


def bl_distance(
    p: Grid2D,
    q: Grid2D,
    metric_scale: float = 1.0,
    method: str = "transport",
    tol: Optional[float] = None,
) -> float:
    """
    Bounded-Lipschitz distance between two measures on the same grid.

    Cell centers are the support points with the Euclidean metric scaled by
    metric_scale. method="potential" solves
        max Σ φ_i (p_i - q_i)  s.t. |φ_i| <= 1, |φ_i - φ_j| <= d_ij
    directly; method="transport" solves its LP dual, a transport problem
    between the positive and negative parts of p - q with cost min(d_ij, 2).
    """
    if metric_scale <= 0:
        raise InvalidParameterError(f"metric_scale must be positive, got {metric_scale}")
    tol = tol or get_setting("BL_LP_TOLERANCE", 1e-8)
    diff, centers = _signed_support(p, q)

    if method == "transport":
        value = _transport_bl(diff, centers, metric_scale, tol)
    elif method == "potential":
        value = _potential_bl(diff, centers, metric_scale, tol)
    else:
        raise InvalidParameterError(f"Unknown bl_distance method: {method}")

    # Solver round-off can leave tiny negatives or overshoot the bound of 2
    return float(min(max(value, 0.0), 2.0))


def bl_distance_refined(p: Grid2D, q: Grid2D, metric_scale: float = 1.0, method: str = "transport") -> float:
    """bl_distance after moving both measures to their common refinement"""
    p_fine, q_fine = common_refinement(p, q)
    return bl_distance(p_fine, q_fine, metric_scale=metric_scale, method=method)
