import numpy as np
import pytest

from config.settings import get_setting, update_setting
from models.grid import Grid1D


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path):
    """Keep logs, results and metrics of a test inside its tmp_path"""
    keys = ("LOG_TO_FILE", "OUTPUT_DIR", "METRICS_DIR", "N_WORKERS", "CHUNK_SIZE")
    saved = {key: get_setting(key) for key in keys}
    update_setting("LOG_TO_FILE", False)
    update_setting("OUTPUT_DIR", str(tmp_path / "results"))
    update_setting("METRICS_DIR", str(tmp_path / "metrics"))
    yield
    for key, value in saved.items():
        update_setting(key, value)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def lebesgue():
    return Grid1D.uniform(16)


@pytest.fixture
def skewed():
    """Non-uniform marginal with every dyadic half charged"""
    return Grid1D.from_weights([0.1, 0.2, 0.3, 0.4])
