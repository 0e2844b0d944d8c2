"""
Observation model: one point Z = (X, Y) of the unit square
"""

from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from utils.error_handling import InvalidParameterError


@dataclass(frozen=True)
class Observation:
    x: float
    y: float

    def __post_init__(self):
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
            raise InvalidParameterError(f"Observation ({self.x}, {self.y}) is outside [0,1]^2")

    def to_dict(self) -> Dict[str, float]:
        return {"x": self.x, "y": self.y}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Observation":
        return cls(float(data["x"]), float(data["y"]))


def from_arrays(x: Iterable[float], y: Iterable[float]) -> List[Observation]:
    return [Observation(float(a), float(b)) for a, b in zip(x, y)]


def to_arrays(data: Sequence[Observation]) -> Tuple[np.ndarray, np.ndarray]:
    """(xs, ys) as float arrays; empty data gives empty arrays"""
    xs = np.array([z.x for z in data], dtype=float)
    ys = np.array([z.y for z in data], dtype=float)
    return xs, ys
