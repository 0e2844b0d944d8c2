"""
Result file writers

Every file starts with the library version and the config hash. CSV files
carry them as two comment lines before the header; JSON documents carry
them as keys. Contents depend only on the config, never on timing.
"""

import json
import logging
import os
from typing import Any, Dict, List

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"


def _plain(value: Any) -> Any:
    """numpy scalars and arrays to JSON-native values"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def _ensure_directory(path: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)


def header_lines(version: str, config_hash: str) -> str:
    return f"# frechetlab {version}\n# config_hash {config_hash}\n"


def write_csv(rows: List[Dict[str, Any]], path: str, version: str, config_hash: str) -> str:
    """Header comments, then the table with a fixed float format"""
    _ensure_directory(path)
    frame = pd.DataFrame([_plain(row) for row in rows])
    with open(path, "w", newline="") as f:
        f.write(header_lines(version, config_hash))
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def dumps_json(document: Dict[str, Any]) -> str:
    return json.dumps(_plain(document), sort_keys=True, indent=2) + "\n"


def write_json(document: Dict[str, Any], path: str, version: str, config_hash: str) -> str:
    """Sorted keys, indent 2, with version and config_hash fields"""
    _ensure_directory(path)
    payload = dict(document)
    payload.update({"version": version, "config_hash": config_hash})
    with open(path, "w") as f:
        f.write(dumps_json(payload))
    logger.info(f"Wrote JSON document to {path}")
    return path
