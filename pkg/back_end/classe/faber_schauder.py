"""
Faber-Schauder representation of a Score-life function on [0,1].

S(l) ~ alpha0 + alpha1 l + sum_j sum_i alpha_ij e_ij(l), j = 0..n-1, where
e_ij is the unit hat supported on [i/2^j, (i+1)/2^j]. An order-n fit uses the
2^n + 1 samples S(k/2^n) and interpolates them exactly.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from back_end.classe.rollout import bind_rep
from back_end.utils.exceptions import ConfigError, DomainError, FitError, ScoreLifeError
from back_end.utils.monitoring import PerformanceMonitor
from modeles.exports import FSRepExport

logger = logging.getLogger(__name__)

DEFAULT_ORDER = 10
MAX_ORDER = 16
ZERO_TOL = 1e-12


def _check_unit_interval(l):
    l = np.asarray(l, dtype=float)
    if np.any(l < 0.0) or np.any(l > 1.0) or not np.all(np.isfinite(l)):
        raise DomainError("l hors de [0,1]")
    return l


def _right_sign(z):
    """sgn with sgn(0) = +1."""
    return np.where(z >= 0.0, 1.0, -1.0)


def basis_eval(i, j, l):
    """
    e_ij(l) = 2^j (|l - i/2^j| + |l - (i+1)/2^j| - |2l - (2i+1)/2^j|).

    Args:
        i: position index, 0 <= i <= 2^j - 1
        j: level, j >= 0
        l: scalar or array in [0,1]
    """
    if j < 0 or not 0 <= i <= 2 ** j - 1:
        raise ConfigError(f"indice de base invalide (i={i}, j={j})")
    l = _check_unit_interval(l)
    scale = 2.0 ** j
    value = scale * (np.abs(l - i / scale) + np.abs(l - (i + 1) / scale) - np.abs(2 * l - (2 * i + 1) / scale))
    return float(value) if value.ndim == 0 else value


def _hat_slope(i, j, l):
    scale = 2.0 ** j
    return scale * (
        _right_sign(l - i / scale) + _right_sign(l - (i + 1) / scale) - 2.0 * _right_sign(2 * l - (2 * i + 1) / scale)
    )


def basis_slope(i, j, l):
    """Derivative of e_ij with the kink convention d|a l - b|/dl = a at l = b/a."""
    if j < 0 or not 0 <= i <= 2 ** j - 1:
        raise ConfigError(f"indice de base invalide (i={i}, j={j})")
    slope = _hat_slope(i, j, _check_unit_interval(l))
    return float(slope) if slope.ndim == 0 else slope


@dataclass(frozen=True, eq=False)
class FSRep:
    """Truncated Faber-Schauder expansion; alpha[j] holds the 2^j level-j coefficients."""

    alpha0: float
    alpha1: float
    alpha: tuple = field(repr=False)
    order: int
    state: tuple = None
    M: int = 2

    @property
    def n_coefficients(self):
        return 2 + sum(len(a) for a in self.alpha)

    def score(self, l):
        return reconstruct(self, l)

    def slope(self, l):
        return derivative(self, l)

    def __call__(self, l):
        return reconstruct(self, l)

    def to_json(self):
        entries = [
            [j, i, float(v)]
            for j, level in enumerate(self.alpha)
            for i, v in enumerate(level)
            if v != 0.0
        ]
        return FSRepExport(
            order=self.order,
            alpha0=self.alpha0,
            alpha1=self.alpha1,
            alpha=entries,
            state=list(self.state) if self.state is not None else None,
            M=self.M,
        ).model_dump()

    @classmethod
    def from_json(cls, data):
        export = FSRepExport.model_validate(data)
        alpha = [np.zeros(2 ** j) for j in range(export.order)]
        for j, i, v in export.alpha:
            j, i = int(j), int(i)
            if not 0 <= j < export.order or not 0 <= i < 2 ** j:
                raise ConfigError(f"coefficient hors bornes: j={j}, i={i}")
            alpha[j][i] = v
        state = tuple(export.state) if export.state is not None else None
        return cls(export.alpha0, export.alpha1, tuple(alpha), export.order, state, export.M)


def _state_tuple(x):
    if x is None:
        return None
    return tuple(float(v) for v in np.atleast_1d(np.asarray(x, dtype=float)))


def _sample(bound, points):
    try:
        values = np.asarray(bound.score(points), dtype=float)
    except (ScoreLifeError, ValueError, ArithmeticError):
        for p in points:
            try:
                bound.score(np.array([p]))
            except (ScoreLifeError, ValueError, ArithmeticError) as e:
                raise FitError(f"évaluation impossible en l={p}: {e}", {"l": float(p)}) from e
        raise
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        p = float(points[bad[0]])
        raise FitError(f"valeur non finie en l={p}", {"l": p})
    return values


@PerformanceMonitor.time_function
def fit(evaluator, x=None, order=DEFAULT_ORDER):
    """
    Hierarchical hat coefficients from the dyadic samples (2^n + 1 queries).

    Args:
        evaluator: TruncatedEvaluator, TabularScore or any object with score(l)
        x: state the representation is built for
        order: n, bounded by MAX_ORDER

    Returns:
        FSRep interpolating the samples at every k/2^n
    """
    order = int(order)
    if not 0 <= order <= MAX_ORDER:
        raise ConfigError(f"ordre de Faber-Schauder hors de [0, {MAX_ORDER}]: {order}")
    bound = bind_rep(evaluator, x)
    size = 2 ** order
    # l = 1 is the all-(M-1) digit string
    points = np.arange(size + 1) / size
    v = _sample(bound, points)

    alpha = []
    for j in range(order):
        step = 2 ** (order - j)
        left = np.arange(2 ** j) * step
        coeffs = v[left + step // 2] - 0.5 * (v[left] + v[left + step])
        coeffs[np.abs(coeffs) < ZERO_TOL] = 0.0
        alpha.append(coeffs)

    alpha0 = float(v[0])
    alpha1 = float(v[-1] - v[0])
    alpha0 = 0.0 if abs(alpha0) < ZERO_TOL else alpha0
    alpha1 = 0.0 if abs(alpha1) < ZERO_TOL else alpha1
    rep = FSRep(alpha0, alpha1, tuple(alpha), order, _state_tuple(x), getattr(bound, "M", 2))
    logger.info(f"Représentation de Faber-Schauder d'ordre {order}: {rep.n_coefficients} coefficients")
    return rep


def _cells(l, j):
    return np.clip(np.floor(l * 2 ** j).astype(np.int64), 0, 2 ** j - 1)


def reconstruct(rep, l):
    """Partial sum of the expansion at l (scalar or array)."""
    l = _check_unit_interval(l)
    scalar = l.ndim == 0
    l = np.atleast_1d(l)
    total = rep.alpha0 + rep.alpha1 * l
    for j, level in enumerate(rep.alpha):
        i = _cells(l, j)
        hat = np.maximum(1.0 - np.abs(2.0 ** (j + 1) * l - (2 * i + 1)), 0.0)
        total = total + level[i] * hat
    return float(total[0]) if scalar else total


def derivative(rep, l):
    """
    dS/dl of the expansion: alpha1 + sum alpha_ij e'_ij(l).

    At a kink the slope of |a l - b| is taken as +a, so the result is the
    right-hand derivative (e.g. -2^(j+1) at the peak of a level-j hat).
    """
    l = _check_unit_interval(l)
    scalar = l.ndim == 0
    l = np.atleast_1d(l)
    total = np.full(l.shape, rep.alpha1, dtype=float)
    for j, level in enumerate(rep.alpha):
        i = _cells(l, j)
        total = total + level[i] * _hat_slope(i, j, l)
    return float(total[0]) if scalar else total
