"""
Minimisation of Score-life representations over l in [0,1).

gradient_descent follows the plain scheme l <- l - eta dS/dl with its three
exits (small squared gradient, sign flip of the gradient, iteration cap) plus
clamping when an iterate leaves the domain. multistart_min runs several seeded
descents and a dyadic grid pre-scan and keeps the best point.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from joblib import Parallel, delayed

from back_end.utils.config import worker_count
from back_end.utils.exceptions import ConfigError
from back_end.utils.monitoring import PerformanceMonitor
from modeles.experiment import OptimizerConfig

logger = logging.getLogger(__name__)

L_UPPER = 1.0 - 2.0 ** -53


class StopReason(str, Enum):
    GRADIENT_SMALL = "gradient_small"
    SIGN_FLIP = "sign_flip"
    CLAMPED = "clamped"
    MAX_ITERS = "max_iters"
    GRID = "grid"


@dataclass
class DescentResult:
    l: float
    value: float
    stop_reason: StopReason
    iterations: int
    start: float


@dataclass
class MultistartResult:
    l_star: float
    value: float
    stop_reason: StopReason
    restarts_used: int
    runs: list = field(default_factory=list, repr=False)
    grid_l: float = None
    grid_value: float = None

    def to_row(self):
        return {
            "l_star": self.l_star,
            "value": self.value,
            "stop_reason": self.stop_reason.value,
            "restarts_used": self.restarts_used,
        }


def _score(rep, l):
    return float(np.atleast_1d(rep.score(np.array([l])))[0])


def _slope(rep, l):
    return float(np.atleast_1d(rep.slope(np.array([l])))[0])


def gradient_descent(rep, cfg=None, l0=None):
    """
    Descend from l0 (default: one Uniform(0,1) draw seeded by cfg.seed).

    Args:
        rep: representation exposing score(l) and slope(l)
        cfg: OptimizerConfig
        l0: optional starting point in [0,1)

    Returns:
        DescentResult; the sign-flip exit is checked from the second
        iteration on and fires after the update has been applied
    """
    cfg = cfg or OptimizerConfig()
    if not hasattr(rep, "slope"):
        raise ConfigError(f"{type(rep).__name__} n'expose pas de dérivée")
    if l0 is None:
        l0 = float(np.random.default_rng(cfg.seed).uniform(0.0, 1.0))
    l = min(max(float(l0), 0.0), L_UPPER)
    start = l
    previous = None
    reason = StopReason.MAX_ITERS
    iterations = 0
    for iterations in range(1, cfg.max_iters + 1):
        g = _slope(rep, l)
        if g * g < cfg.delta:
            reason = StopReason.GRADIENT_SMALL
            break
        candidate = l - cfg.eta * g
        if candidate < 0.0 or candidate > L_UPPER:
            l = min(max(candidate, 0.0), L_UPPER)
            reason = StopReason.CLAMPED
            logger.debug(f"Itéré {candidate:.6f} ramené à {l:.6f}")
            break
        l = candidate
        if previous is not None and previous * g < 0.0:
            reason = StopReason.SIGN_FLIP
            break
        previous = g
    return DescentResult(l, _score(rep, l), reason, iterations, start)


def grid_scan(rep, depth):
    """Best of the 2^depth points k/2^depth (smallest l on ties)."""
    points = np.arange(2 ** depth) / 2 ** depth
    values = np.asarray(rep.score(points), dtype=float)
    best = int(np.argmin(values))
    return float(points[best]), float(values[best])


@PerformanceMonitor.time_function
def multistart_min(rep, cfg=None, restarts=None):
    """
    Best of R seeded descents and an optional dyadic grid pre-scan.

    Starts are drawn one after another from a single generator seeded with
    cfg.seed, so the starts used for R restarts are a prefix of those for R+1.
    The grid best point seeds one extra descent.
    """
    cfg = cfg or OptimizerConfig()
    restarts = cfg.restarts if restarts is None else int(restarts)
    if restarts < 1:
        raise ConfigError(f"restarts >= 1 requis (reçu {restarts})")
    rng = np.random.default_rng(cfg.seed)
    starts = [float(rng.uniform(0.0, 1.0)) for _ in range(restarts)]

    grid_l = grid_value = None
    if cfg.grid_depth > 0:
        grid_l, grid_value = grid_scan(rep, cfg.grid_depth)
        starts.append(grid_l)

    runs = Parallel(n_jobs=worker_count(), prefer="threads")(
        delayed(gradient_descent)(rep, cfg, l0) for l0 in starts
    )
    candidates = [(r.value, r.l, r.stop_reason) for r in runs]
    if grid_l is not None:
        candidates.append((grid_value, grid_l, StopReason.GRID))
    value, l_star, reason = min(candidates, key=lambda c: (c[0], c[1]))
    logger.info(f"Multistart ({restarts} départs): l*={l_star:.6f}, S={value:.6g} ({reason.value})")
    return MultistartResult(l_star, value, reason, restarts, runs, grid_l, grid_value)
