"""
Random density f(x,y) = 1 + g(x) h(y) built from two independent Brownian
paths, g(t) = φ(W_1(t)) - ∫φ(W_1), h likewise from W_2.

The centered occupation functionals U_i(t) are computed in their time-integral
form, U_i(t) = ½(∫_0^t φ(W_i) ds - t ∫_0^1 φ(W_i) ds); local times are not
simulated.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Union

import numpy as np

from config.settings import get_setting
from core.basis import BasisPair, PiecewiseLinearFunction
from core.tensor_prior import TensorDensity
from models.grid import Grid1D, Rectangle
from utils.error_handling import InvalidParameterError
from utils.random_streams import SeedLike, make_rng

logger = logging.getLogger(__name__)

MIN_STEPS = 1000
PHI_GRID = np.linspace(-12.0, 12.0, 24001)

PHI_FUNCTIONS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "half_sine": lambda w: 0.5 * np.sin(w),
    "half_tanh": lambda w: 0.5 * np.tanh(w),
    "clip": lambda w: np.clip(w, -0.5, 0.5),
    "positive_indicator": lambda w: (np.asarray(w) > 0).astype(float),
    "logistic": lambda w: 1.0 / (1.0 + np.exp(-np.asarray(w))),
    "constant": lambda w: np.full(np.shape(w), 0.25),
}

PhiLike = Union[str, Callable[[np.ndarray], np.ndarray]]


def resolve_phi(phi: PhiLike) -> Callable[[np.ndarray], np.ndarray]:
    """Named or callable φ, checked to map into [-½, ½] or [0, 1]"""
    if isinstance(phi, str):
        if phi not in PHI_FUNCTIONS:
            raise InvalidParameterError(f"Unknown phi '{phi}', choose from {sorted(PHI_FUNCTIONS)}")
        phi = PHI_FUNCTIONS[phi]

    values = np.asarray(phi(PHI_GRID), dtype=float)
    centered = np.all((values >= -0.5) & (values <= 0.5))
    unit = np.all((values >= 0.0) & (values <= 1.0))
    if not (centered or unit):
        raise InvalidParameterError(
            f"phi must take values in [-1/2, 1/2] or [0, 1]; observed range [{values.min():.4g}, {values.max():.4g}]"
        )
    return phi


def _cumulative_trapezoid(values: np.ndarray, dt: float) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(0.5 * (values[1:] + values[:-1]) * dt)])


@dataclass(frozen=True, eq=False)
class OccupationFunctional:
    """t ↦ U(t) = ½(∫_0^t φ(W) ds - t ∫_0^1 φ(W) ds)"""
    knots: np.ndarray
    running_integral: np.ndarray

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return 0.5 * (np.interp(t, self.knots, self.running_integral) - t * self.running_integral[-1])


@dataclass(frozen=True, eq=False)
class BrownianDensity:
    """A realized Brownian random density with its occupation functionals"""
    tensor: TensorDensity
    U1: OccupationFunctional
    U2: OccupationFunctional
    path1: np.ndarray
    path2: np.ndarray

    def density(self, x, y) -> np.ndarray:
        return self.tensor.density(x, y)

    def rectangle_prob(self, rect: Rectangle) -> float:
        return self.tensor.rectangle_prob(rect)

    def sample_points(self, n: int, rng: np.random.Generator):
        return self.tensor.sample_points(n, rng)

    def identity_terms(self, a: float, b: float):
        """(P_f([0,a]×[0,b]), ab + 4 U_1(a) U_2(b))"""
        prob = self.rectangle_prob(Rectangle.corner(a, b))
        closed_form = a * b + 4.0 * float(self.U1(a)) * float(self.U2(b))
        return prob, closed_form

    def identity_rows(self, points) -> List[dict]:
        rows = []
        for a, b in points:
            prob, closed_form = self.identity_terms(float(a), float(b))
            rows.append({"a": float(a), "b": float(b), "P_f": prob, "closed_form": closed_form,
                         "residual": prob - closed_form})
        return rows


def brownian_density(
    phi: PhiLike,
    n_steps: Optional[int] = None,
    seed: SeedLike = None,
    rng: Optional[np.random.Generator] = None,
) -> BrownianDensity:
    """Simulate W_1, W_2 on [0,1] with n_steps Euler increments and build f"""
    n_steps = n_steps or get_setting("BROWNIAN_STEPS", MIN_STEPS)
    if n_steps < MIN_STEPS:
        raise InvalidParameterError(f"n_steps must be at least {MIN_STEPS}, got {n_steps}")
    phi_fn = resolve_phi(phi)
    rng = rng or make_rng(seed)

    dt = 1.0 / n_steps
    knots = np.linspace(0.0, 1.0, n_steps + 1)
    increments = rng.standard_normal((2, n_steps)) * np.sqrt(dt)
    paths = np.concatenate([np.zeros((2, 1)), np.cumsum(increments, axis=1)], axis=1)

    functions, functionals = [], []
    for path in paths:
        values = np.asarray(phi_fn(path), dtype=float)
        running = _cumulative_trapezoid(values, dt)
        functions.append(PiecewiseLinearFunction(knots, values - running[-1]))
        functionals.append(OccupationFunctional(knots, running))

    # Lebesgue marginals; a single cell has constant density 1
    lebesgue = Grid1D.uniform(1)
    tensor = TensorDensity((BasisPair(functions[0], functions[1]),), np.array([1.0]), lebesgue, lebesgue)
    return BrownianDensity(tensor, functionals[0], functionals[1], paths[0], paths[1])


@dataclass(frozen=True)
class BrownianPrior:
    """Sampler of Brownian random densities"""
    phi: str = "half_sine"
    n_steps: int = MIN_STEPS

    def __post_init__(self):
        resolve_phi(self.phi)

    def sample(self, rng: np.random.Generator) -> BrownianDensity:
        return brownian_density(self.phi, self.n_steps, rng=rng)
