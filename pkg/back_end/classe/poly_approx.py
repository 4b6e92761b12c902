"""
Polynomial approximation of Score-life functions, closed-form minimisation and
one-step Bellman action selection.
"""

import logging
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as P

from back_end.classe.life_codec import ActionCode
from back_end.classe.rollout import bind_rep, grid_argmin
from back_end.utils.exceptions import ConfigError, FitError
from back_end.utils.monitoring import PerformanceMonitor
from modeles.exports import PolyRepExport

logger = logging.getLogger(__name__)

DEFAULT_DEGREE = 2
DEFAULT_SAMPLES = 200
CLOSED_FORM_MAX_DEGREE = 5
DENSE_GRID = 1_000_000
L_UPPER = 1.0 - 2.0 ** -53


@dataclass(frozen=True, eq=False)
class PolyRep:
    """S_poly(l) = sum_i coeffs[i] l^i (ascending powers)."""

    coeffs: np.ndarray
    degree: int
    state: tuple = None
    n_samples: int = 0
    rms: float = float("nan")
    condition: float = float("nan")
    M: int = 2

    def score(self, l):
        return P.polyval(np.asarray(l, dtype=float), self.coeffs)

    def slope(self, l):
        return P.polyval(np.asarray(l, dtype=float), P.polyder(self.coeffs))

    def __call__(self, l):
        return self.score(l)

    def polynomial(self):
        return Polynomial(self.coeffs)

    def to_json(self):
        return PolyRepExport(
            degree=self.degree,
            coeffs=[float(c) for c in self.coeffs],
            rms=float(self.rms),
            n_samples=self.n_samples,
            state=list(self.state) if self.state is not None else None,
            condition=float(self.condition),
            M=self.M,
        ).model_dump()

    @classmethod
    def from_json(cls, data):
        export = PolyRepExport.model_validate(data)
        state = tuple(export.state) if export.state is not None else None
        return cls(
            np.asarray(export.coeffs, dtype=float),
            export.degree,
            state,
            export.n_samples,
            export.rms,
            export.condition if export.condition is not None else float("nan"),
            export.M,
        )


def _state_tuple(x):
    if x is None:
        return None
    return tuple(float(v) for v in np.atleast_1d(np.asarray(x, dtype=float)))


@PerformanceMonitor.time_function
def fit_poly(evaluator, x=None, degree=DEFAULT_DEGREE, n_samples=DEFAULT_SAMPLES, seed=0):
    """
    Least-squares polynomial through S at n_samples uniform draws of l.

    Args:
        evaluator: TruncatedEvaluator or any representation with score(l)
        x: state
        degree: polynomial degree (>= 1)
        n_samples: number of l_i ~ Uniform(0,1), at least degree + 1
        seed: generator seed

    Raises:
        FitError: too few samples or rank-deficient design matrix
    """
    if degree < 1:
        raise ConfigError(f"degré >= 1 requis (reçu {degree})")
    if n_samples < degree + 1:
        raise FitError(
            f"{n_samples} échantillons pour un degré {degree}",
            {"n_samples": n_samples, "degree": degree},
        )
    bound = bind_rep(evaluator, x)
    rng = np.random.default_rng(seed)
    l = rng.uniform(0.0, 1.0, n_samples)
    y = np.asarray(bound.score(l), dtype=float)
    if not np.all(np.isfinite(y)):
        raise FitError("valeurs non finies dans l'échantillon", {"l": float(l[~np.isfinite(y)][0])})

    design = P.polyvander(l, degree)
    condition = float(np.linalg.cond(design))
    coeffs, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < degree + 1:
        raise FitError(
            f"système mal conditionné (rang {rank} < {degree + 1}, cond={condition:.3e})",
            {"rank": int(rank), "condition": condition},
        )
    rms = float(np.sqrt(np.mean((design @ coeffs - y) ** 2)))
    logger.debug(f"Ajustement polynomial degré {degree}: rms={rms:.3e}, cond={condition:.3e}")
    return PolyRep(coeffs, degree, _state_tuple(x), n_samples, rms, condition, getattr(bound, "M", 2))


def poly_min(rep):
    """
    Global minimum of the polynomial on [0, 1).

    Degrees up to 5 use the real roots of the derivative inside the interval
    plus both endpoints; higher degrees fall back to a dense grid.

    Returns:
        (l*, value)
    """
    if rep.degree <= CLOSED_FORM_MAX_DEGREE:
        roots = rep.polynomial().deriv().roots()
        real = roots[np.abs(np.imag(roots)) < 1e-10].real if roots.size else np.array([])
        candidates = np.concatenate([[0.0], real[(real >= 0.0) & (real <= L_UPPER)], [L_UPPER]])
    else:
        candidates = np.linspace(0.0, 1.0, DENSE_GRID + 1)
        candidates[-1] = L_UPPER
    candidates = np.sort(candidates)
    values = rep.score(candidates)
    best = int(np.argmin(values))
    return float(candidates[best]), float(values[best])


def rep_min_value(rep, depth=10):
    """min_l S(l) for a polynomial (closed form) or any other representation (grid)."""
    if isinstance(rep, PolyRep):
        return poly_min(rep)[1]
    return grid_argmin(rep, None, depth)[1]


def bellman_values(env, x, successor_reps):
    """
    Q(x, a) = g(x, a) + gamma min_l S(l, f(x, a)) for every action code.

    Args:
        successor_reps: sequence indexed by action code, or a callable
            taking the successor state and returning a representation
    """
    q = np.zeros(env.M)
    for a in range(env.M):
        rep = successor_reps(env.step(x, a)) if callable(successor_reps) else successor_reps[a]
        q[a] = env.cost(x, a) + env.gamma * rep_min_value(rep)
    return q


def bellman_action(env, x, successor_reps):
    """argmin_a Q(x, a); the lowest action code wins ties."""
    q = bellman_values(env, x, successor_reps)
    return ActionCode(int(np.argmin(q)), env.M)


def transform_poly(rep, params, gamma, M=2, state=None):
    """
    Polynomial for the downstream state: (S_poly(l / M^N + phi) - psi) / gamma^N.

    Composition of polynomials keeps the degree, so the image is exact.
    """
    inner = Polynomial([params.phi_value, float(M) ** -params.N])
    image = (rep.polynomial()(inner) - params.psi) / gamma ** params.N
    coeffs = np.zeros(rep.degree + 1)
    coeffs[:len(image.coef)] = image.coef
    return PolyRep(coeffs, rep.degree, _state_tuple(state), rep.n_samples, rep.rms, rep.condition, M)
