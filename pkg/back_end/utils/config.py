"""
Configuration: variables d'environnement (.env) et fichiers `key = value`.
"""

import logging
import os
from pathlib import Path

from dotenv import load_dotenv

from back_end.utils.exceptions import ConfigError

# Charger les variables d'environnement
load_dotenv()

logger = logging.getLogger(__name__)

# Constantes du cartpole (jeu standard compatible Gym)
CARTPOLE_CONSTANTS = {
    "gravity": 9.8,
    "masscart": 1.0,
    "masspole": 0.1,
    "length": 0.5,  # demi-longueur du pole
    "force_mag": 10.0,
    "tau": 0.02,
    "x_threshold": 2.4,
    "theta_threshold": 12 * 2 * 3.141592653589793 / 360,
    "episode_cap": 500,
    # bornes de vitesse utilisées pour G_max du coût quadratique
    "xdot_bound": 3.0,
    "thetadot_bound": 3.5,
    "q_diag": (2.0, 1.0, 8.0, 1.0),
    "reset_low": -0.05,
    "reset_high": 0.05,
}

RUNTIME = {
    "threads": int(os.getenv("SCORELIFE_THREADS", "1")),
    "log_level": os.getenv("SCORELIFE_LOG_LEVEL", "INFO"),
    "log_file": os.getenv("SCORELIFE_LOG_FILE", "scorelife.log"),
    "output_dir": os.getenv("SCORELIFE_OUTPUT_DIR", "resultats"),
}


def worker_count():
    """Number of joblib workers allowed by SCORELIFE_THREADS (at least 1)."""
    try:
        return max(1, int(os.getenv("SCORELIFE_THREADS", RUNTIME["threads"])))
    except ValueError:
        raise ConfigError(f"SCORELIFE_THREADS invalide: {os.getenv('SCORELIFE_THREADS')}")


def parse_config_text(text):
    """
    Parse a `key = value` config text.

    Args:
        text: file contents

    Returns:
        Dict of raw string values (comma-separated lists are kept as strings,
        the pydantic model splits them)
    """
    values = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"Ligne {lineno} invalide (attendu 'key = value'): {raw_line!r}")
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if not key:
            raise ConfigError(f"Ligne {lineno}: clé vide")
        values[key] = value.strip()
    return values


def read_config_file(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Fichier de configuration introuvable: {path}")
    logger.info(f"Lecture de la configuration {path}")
    return parse_config_text(path.read_text(encoding="utf-8"))


def format_config(values):
    """Inverse of parse_config_text for flat dicts (lists joined by commas)."""
    lines = []
    for key in sorted(values):
        value = values[key]
        if isinstance(value, (list, tuple)):
            value = ", ".join(str(v) for v in value)
        elif value is None:
            value = ""
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
