"""
Truncated stick-breaking realizations of Dirichlet random probability measures

Q = Σ_j w_j δ_{θ_j} with w_j = V_j Π_{l<j}(1 - V_l), V_j ~ Beta(1, c) and
θ_j i.i.d. from the normalized base measure. Sticks are added until the
residual mass Π(1 - V_l) drops below the tolerance; the last stick absorbs
the residual so every realization has total mass exactly one. Posterior
measures DP(c + n, ν_n) are drawn as a Beta-weighted mix of a Dirichlet over
the observations and a prior realization.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Protocol, Sequence

import numpy as np

from config.settings import get_setting
from models.grid import Cdf1D, Grid1D, IntervalSet
from utils.error_handling import InvalidParameterError, SamplingError
from utils.random_streams import SeedLike, map_chunks

logger = logging.getLogger(__name__)


class BaseMeasure(Protocol):
    """Anything that can draw atom locations in [0,1]"""

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray: ...


@dataclass(frozen=True, eq=False)
class PosteriorBaseMeasure:
    """ν_n = c ν + Σ_i δ_{Y_i}, an unnormalized measure of total mass c + n"""
    c: float
    nu: Grid1D
    y_data: np.ndarray

    def __post_init__(self):
        if self.c <= 0:
            raise InvalidParameterError(f"Concentration must be positive, got {self.c}")
        y = np.asarray(self.y_data, dtype=float).ravel()
        if np.any((y < 0) | (y > 1)):
            raise InvalidParameterError("Observed Y values must lie in [0,1]")
        object.__setattr__(self, "y_data", y)

    @property
    def n(self) -> int:
        return self.y_data.size

    @property
    def total_mass(self) -> float:
        return self.c + self.n

    def mass(self, B: IntervalSet) -> float:
        """ν_n(B)"""
        return self.c * B.measure(self.nu) + float(np.count_nonzero(B.contains(self.y_data)))

    def cdf(self, y: float) -> float:
        """ν_n([0, y])"""
        return self.c * float(self.nu.cdf_at(y)) + float(np.count_nonzero(self.y_data <= y))

    def cell_masses(self) -> np.ndarray:
        """ν_n of each cell of ν's grid"""
        counts = np.bincount(self.nu.cell_index(self.y_data), minlength=self.nu.n_cells) if self.n else 0
        return self.c * self.nu.weights + counts

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draws from ν_n / (c + n)"""
        if self.n == 0:
            # Same stream usage as the prior base so n = 0 reproduces prior draws
            return self.nu.sample(rng, size)
        from_data = rng.random(size) < self.n / self.total_mass
        out = self.nu.sample(rng, size)
        picks = rng.integers(0, self.n, size)
        out[from_data] = self.y_data[picks[from_data]]
        return out


@dataclass(frozen=True, eq=False)
class DPStickBreaking:
    """One realization of a Dirichlet random probability measure"""
    c: float
    locations: np.ndarray
    weights: np.ndarray

    @property
    def truncation(self) -> int:
        return int(np.count_nonzero(self.weights))

    def mass(self, B: IntervalSet) -> float:
        return float(self.weights[B.contains(self.locations)].sum())

    def cdf(self, y) -> np.ndarray:
        """G(y) = Q([0, y])"""
        y = np.asarray(y, dtype=float)
        return (self.weights * (self.locations <= y[..., None])).sum(axis=-1)

    def cell_masses(self, n_cells: int) -> np.ndarray:
        idx = np.minimum((self.locations * n_cells).astype(int), n_cells - 1)
        return np.bincount(idx, weights=self.weights, minlength=n_cells)

    def to_cdf(self) -> Cdf1D:
        keep = self.weights > 0
        return Cdf1D.from_atoms(self.locations[keep], self.weights[keep])

    def to_dict(self) -> Dict[str, Any]:
        keep = self.weights > 0
        return {"c": self.c, "locations": self.locations[keep].tolist(), "weights": self.weights[keep].tolist()}


@dataclass(frozen=True, eq=False)
class StickBreakingBatch:
    """R realizations stored row-wise; rows are zero-padded past their truncation"""
    c: float
    locations: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    def row(self, i: int) -> DPStickBreaking:
        return DPStickBreaking(self.c, self.locations[i], self.weights[i])

    def cdf(self, y: float) -> np.ndarray:
        """G(y) for every row"""
        return (self.weights * (self.locations <= y)).sum(axis=1)

    def mass(self, B: IntervalSet) -> np.ndarray:
        return (self.weights * B.contains(self.locations)).sum(axis=1)

    def cell_masses(self, n_cells: int) -> np.ndarray:
        """(R, n_cells) masses of the cells [i/n, (i+1)/n)"""
        idx = np.minimum((self.locations * n_cells).astype(int), n_cells - 1)
        flat = idx + n_cells * np.arange(self.size)[:, None]
        return np.bincount(flat.ravel(), weights=self.weights.ravel(), minlength=self.size * n_cells).reshape(
            self.size, n_cells
        )


def _initial_sticks(c: float, tol: float) -> int:
    # E log Π(1 - V) = -T / c for V ~ Beta(1, c)
    return max(8, int(math.ceil(2.0 * c * math.log(1.0 / tol))))


def sample_sticks(
    c: float,
    base: BaseMeasure,
    size: int,
    rng: np.random.Generator,
    tol: Optional[float] = None,
    max_sticks: Optional[int] = None,
) -> StickBreakingBatch:
    """`size` independent realizations of DP(c, base)"""
    if c <= 0:
        raise InvalidParameterError(f"Concentration must be positive, got {c}")
    tol = get_setting("STICK_RESIDUAL_TOLERANCE", 1e-8) if tol is None else tol
    max_sticks = max_sticks or get_setting("MAX_STICKS", 100000)

    n_sticks = min(_initial_sticks(c, tol), max_sticks)
    V = rng.beta(1.0, c, size=(size, n_sticks))
    log_residual = np.log1p(-V).sum(axis=1)
    while np.any(log_residual >= math.log(tol)):
        if n_sticks >= max_sticks:
            raise SamplingError(f"Stick-breaking residual above {tol} after {max_sticks} sticks (c={c})")
        extra = min(n_sticks, max_sticks - n_sticks)
        more = rng.beta(1.0, c, size=(size, extra))
        V = np.concatenate([V, more], axis=1)
        log_residual = np.log1p(-V).sum(axis=1)
        n_sticks += extra

    remaining = np.exp(np.concatenate([np.zeros((size, 1)), np.cumsum(np.log1p(-V), axis=1)], axis=1))
    weights = V * remaining[:, :-1]
    # Per-row truncation: first stick after which the residual is below tol
    cut = np.argmax(remaining[:, 1:] < tol, axis=1)
    cols = np.arange(n_sticks)
    weights = np.where(cols[None, :] <= cut[:, None], weights, 0.0)
    rows = np.arange(size)
    weights[rows, cut] += remaining[rows, cut + 1]

    locations = base.sample(rng, size * n_sticks).reshape(size, n_sticks)
    logger.debug(f"Stick-breaking batch of {size}: {n_sticks} sticks, max truncation {int(cut.max()) + 1}")
    return StickBreakingBatch(c, locations, weights)


def dp_stick_breaking(c: float, base: BaseMeasure, rng: np.random.Generator, tol: Optional[float] = None) -> DPStickBreaking:
    """A single realization of DP(c, base)"""
    return sample_sticks(c, base, 1, rng, tol=tol).row(0)


def sample_posterior_sticks(
    base: PosteriorBaseMeasure,
    size: int,
    rng: np.random.Generator,
    tol: Optional[float] = None,
    max_sticks: Optional[int] = None,
) -> StickBreakingBatch:
    """
    `size` realizations of DP(c + n, ν_n / (c + n)) through the conjugate split
    Q = W Σ_j D_j δ_{a_j} + (1 - W) Q', W ~ Beta(n, c), D ~ Dir(counts of the
    distinct observations a_j), Q' ~ DP(c, ν). The stick count depends on c only.
    """
    prior = sample_sticks(base.c, base.nu, size, rng, tol=tol, max_sticks=max_sticks)
    if base.n == 0:
        return prior
    atoms, counts = np.unique(base.y_data, return_counts=True)
    W = rng.beta(base.n, base.c, size=size)
    D = rng.dirichlet(counts.astype(float), size=size)
    locations = np.concatenate([np.broadcast_to(atoms, (size, atoms.size)), prior.locations], axis=1)
    weights = np.concatenate([W[:, None] * D, (1.0 - W)[:, None] * prior.weights], axis=1)
    return StickBreakingBatch(base.total_mass, locations, weights)


def _batch_width(c: float, base: BaseMeasure, tol: float) -> int:
    """Atoms per realization at the initial truncation"""
    if isinstance(base, PosteriorBaseMeasure):
        return _initial_sticks(base.c, tol) + np.unique(base.y_data).size
    return _initial_sticks(c, tol)


def dp_monte_carlo(
    c: float,
    base: BaseMeasure,
    n_draws: int,
    statistic: Callable[[StickBreakingBatch, np.random.Generator], np.ndarray],
    seed: SeedLike = None,
    workers: Optional[int] = None,
    chunk_size: Optional[int] = None,
) -> np.ndarray:
    """
    Evaluate statistic(batch, rng) over n_draws realizations of DP(c, base) in
    fixed-size chunks; rows of the result follow draw order whatever the worker
    count. A PosteriorBaseMeasure base is drawn by the conjugate split, and then
    c must equal its total mass c + n.

    Chunks hold at most MAX_BATCH_ENTRIES atoms in total, so wide batches
    (large c or many distinct observations) get fewer rows per chunk.
    """
    posterior = isinstance(base, PosteriorBaseMeasure)
    if posterior and not math.isclose(c, base.total_mass):
        raise InvalidParameterError(f"Posterior draws need c = c + n = {base.total_mass}, got {c}")

    tol = get_setting("STICK_RESIDUAL_TOLERANCE", 1e-8)
    chunk_size = chunk_size or get_setting("CHUNK_SIZE", 4096)
    budget = get_setting("MAX_BATCH_ENTRIES", 1 << 22)
    chunk_size = max(1, min(chunk_size, budget // _batch_width(c, base, tol)))

    def run_chunk(rng: np.random.Generator, size: int) -> np.ndarray:
        batch = sample_posterior_sticks(base, size, rng) if posterior else sample_sticks(c, base, size, rng)
        return np.asarray(statistic(batch, rng))

    return np.concatenate(map_chunks(run_chunk, n_draws, seed, workers=workers, chunk_size=chunk_size))


def posterior_parameters(c: float, nu: Grid1D, y_data: Sequence[float]):
    """(c + n, ν_n) for DP conjugacy"""
    base = PosteriorBaseMeasure(c, nu, np.asarray(y_data, dtype=float))
    return base.total_mass, base
