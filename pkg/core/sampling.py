"""
Point samplers for random densities on [0,1]^2
"""

import logging
from typing import Callable, Optional, Tuple

import numpy as np

from config.settings import get_setting
from models.grid import Grid1D
from utils.error_handling import SamplingError

logger = logging.getLogger(__name__)


def rejection_sample(
    density: Callable[[np.ndarray, np.ndarray], np.ndarray],
    mu: Grid1D,
    nu: Grid1D,
    n: int,
    rng: np.random.Generator,
    bound: float = 2.0,
    min_acceptance: Optional[float] = None,
    warmup: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw n points from a density with respect to λ = μ × ν, using λ as the
    proposal and `bound` as the envelope constant (f <= bound).
    """
    min_acceptance = get_setting("MIN_ACCEPTANCE_RATE", 0.1) if min_acceptance is None else min_acceptance
    warmup = get_setting("REJECTION_WARMUP", 1000) if warmup is None else warmup

    if n == 0:
        return np.empty(0), np.empty(0)

    xs, ys = [], []
    accepted = proposed = 0
    batch = max(2 * n, 256)
    while accepted < n:
        x = mu.sample(rng, batch)
        y = nu.sample(rng, batch)
        f = density(x, y)
        if np.any(f > bound * (1 + 1e-12)):
            raise SamplingError(f"Density exceeds the rejection envelope {bound}: max {np.max(f):.6g}")
        keep = rng.random(batch) * bound <= f
        xs.append(x[keep])
        ys.append(y[keep])
        accepted += int(keep.sum())
        proposed += batch

        if proposed >= warmup and accepted / proposed < min_acceptance:
            raise SamplingError(
                f"Rejection acceptance rate {accepted / proposed:.3f} below {min_acceptance} after {proposed} proposals"
            )

    logger.debug(f"Rejection sampler accepted {accepted}/{proposed} proposals")
    return np.concatenate(xs)[:n], np.concatenate(ys)[:n]
