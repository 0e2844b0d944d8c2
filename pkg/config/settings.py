# config/settings.py
import os
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

VERSION = "0.1.0"
ENV_PREFIX = "FRECHETLAB_"

logger = logging.getLogger(__name__)


class Settings:
    """Settings manager for FrechetLab"""

    # Default settings
    _defaults = {
        # Discretization
        "GRID_RESOLUTION": 256,
        "MEASURE_TOLERANCE": 1e-12,

        # Solvers
        "BL_LP_TOLERANCE": 1e-8,
        "BISECTION_TOLERANCE": 1e-12,
        "SECTION_CHECK_TOLERANCE": 1e-10,

        # Dirichlet process truncation
        "STICK_RESIDUAL_TOLERANCE": 1e-8,
        "MAX_STICKS": 100000,

        # Posterior
        "MAX_POSTERIOR_COMPONENTS": 1000000,
        "MIN_ACCEPTANCE_RATE": 0.1,
        "REJECTION_WARMUP": 1000,

        # Checkerboard priors
        "FULL_PERMUTATION_MAX_K": 6,
        "K_MAX": 8,
        "K_GEOMETRIC_P": 0.5,

        # Brownian construction
        "BROWNIAN_STEPS": 1000,

        # Execution
        "DEFAULT_SEED": 20240601,
        "N_WORKERS": 1,
        "CHUNK_SIZE": 4096,
        "MAX_BATCH_ENTRIES": 4194304,

        # Output locations
        "OUTPUT_DIR": "results",
        "LOG_DIR": "logs",
        "METRICS_DIR": "metrics",
        "LOG_TO_FILE": True,
    }

    def __init__(self, settings_file: Optional[Path] = None):
        self._settings = dict(self._defaults)
        self._settings_file = settings_file or Path(__file__).parent / "settings.json"
        self._apply(self._read_file(), source=str(self._settings_file))
        self._apply(self._read_env(), source="environment")

    def _read_file(self) -> Dict[str, Any]:
        if not self._settings_file.exists():
            return {}
        try:
            with open(self._settings_file, "r") as f:
                return json.load(f)
        except (json.JSONDecodeError, IOError) as e:
            logger.warning(f"Ignoring unreadable settings file {self._settings_file}: {e}")
            return {}

    def _read_env(self) -> Dict[str, str]:
        return {key: os.environ[ENV_PREFIX + key] for key in self._defaults if ENV_PREFIX + key in os.environ}

    def _apply(self, overrides: Dict[str, Any], source: str) -> None:
        for key, raw in overrides.items():
            if key not in self._defaults:
                logger.warning(f"Unknown setting {key} in {source}")
                continue
            try:
                self._settings[key] = _coerce(raw, self._defaults[key])
            except ValueError:
                logger.warning(f"Setting {key}={raw!r} from {source} is not a {type(self._defaults[key]).__name__}")

    def get(self, key: str, default: Any = None) -> Any:
        return self._settings.get(key, default)

    def set(self, key: str, value: Any) -> None:
        self._settings[key] = value

    def save(self) -> Path:
        """Write the values that differ from the defaults"""
        changed = {key: value for key, value in self._settings.items() if self._defaults.get(key) != value}
        with open(self._settings_file, "w") as f:
            json.dump(changed, f, indent=2, sort_keys=True)
        return self._settings_file

    def get_all(self) -> Dict[str, Any]:
        return dict(self._settings)


def _coerce(raw: Any, default: Any) -> Any:
    """Convert a file or environment value to the type of its default"""
    if isinstance(default, bool):
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in ("true", "1", "yes", "on"):
            return True
        if text in ("false", "0", "no", "off"):
            return False
        raise ValueError(text)
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return str(raw)


_settings = Settings()


def get_setting(key: str, default: Any = None) -> Any:
    return _settings.get(key, default)


def update_setting(key: str, value: Any) -> None:
    """Override a setting for the rest of the process"""
    _settings.set(key, value)


def get_all_settings() -> Dict[str, Any]:
    return _settings.get_all()
