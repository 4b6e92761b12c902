"""
Écriture des résultats: CSV (pandas), JSON et écho de configuration.
"""

import json
import logging
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

CONFIG_ECHO = "config_echo.txt"


def ensure_dir(path):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Type non sérialisable: {type(value).__name__}")


def write_frame(frame, path):
    """CSV with a header row and '.' decimal separator."""
    path = Path(path)
    ensure_dir(path.parent)
    frame.to_csv(path, index=False)
    logger.info(f"CSV écrit: {path} ({len(frame)} lignes)")
    return path


def write_json(data, path):
    path = Path(path)
    ensure_dir(path.parent)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, ensure_ascii=False, default=_json_default)
    logger.info(f"JSON écrit: {path}")
    return path


def read_json(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def write_config_echo(config, out_dir):
    """Fully resolved configuration, defaults included, next to the results."""
    path = ensure_dir(out_dir) / CONFIG_ECHO
    path.write_text(config.to_text(), encoding="utf-8")
    logger.info(f"Configuration résolue écrite: {path}")
    return path
