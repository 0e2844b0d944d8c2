"""
Readers for the JSON and CSV inputs of the experiments
"""

import json
import logging
from typing import Any, Dict, List

import pandas as pd

from models.grid import Grid1D, Grid2D, IntervalSet
from models.observation import Observation, from_arrays
from utils.error_handling import ConfigError, InvalidMeasureError

logger = logging.getLogger(__name__)


def load_json(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot read JSON file {path}: {e}") from e


def load_grid1d(path: str) -> Grid1D:
    """{"n_cells", "weights"}"""
    return Grid1D.from_dict(load_json(path))


def load_grid2d(path: str) -> Grid2D:
    """{"k_x", "k_y", "mass"}"""
    return Grid2D.from_dict(load_json(path))


def load_interval_set(path: str) -> IntervalSet:
    """{"intervals": [[lo, hi], ...]}"""
    return IntervalSet.from_dict(load_json(path))


def load_observations(path: str) -> List[Observation]:
    """CSV with an `x,y` header, one observation per row; `#` lines are comments"""
    try:
        frame = pd.read_csv(path, comment="#")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ConfigError(f"Cannot read data file {path}: {e}") from e

    missing = {"x", "y"} - set(frame.columns)
    if missing:
        raise ConfigError(f"Data file {path} needs an x,y header; missing {sorted(missing)}")
    if frame[["x", "y"]].isna().any().any():
        raise InvalidMeasureError(f"Data file {path} has empty x or y values")

    logger.debug(f"Loaded {len(frame)} observations from {path}")
    return from_arrays(frame["x"].to_numpy(dtype=float), frame["y"].to_numpy(dtype=float))
