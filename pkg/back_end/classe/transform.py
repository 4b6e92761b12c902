"""
Relating the Score-life functions of two states joined by a known prefix.

With (phi, psi, N) the prefix phase, discounted prefix cost and prefix length
of the actions leading from x0 to x_N:

    S(l, x_N) = (S(l / M^N + phi, x0) - psi) / gamma^N
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from back_end.classe.life_codec import LifeValue, concat, prefix_phase
from back_end.classe.rollout import bind_rep
from back_end.utils.exceptions import ConfigError, DomainError, FitError
from back_end.utils.monitoring import PerformanceMonitor
from modeles.exports import TransformExport

logger = logging.getLogger(__name__)

PHI_UPPER = 1.0 - 1e-12
N_BOUNDS = (1e-6, 64.0)
LATTICE_MAX_POINTS = 4096
SNAP_TOLERANCE = 0.10
TIE_TOL = 1e-10


@dataclass(frozen=True)
class TransformParams:
    phi_value: float
    psi: float
    N: float
    gamma: float
    M: int = 2
    phi: LifeValue = None

    @property
    def integral(self):
        return float(self.N).is_integer()

    @classmethod
    def identity(cls, gamma, M=2):
        return cls(0.0, 0.0, 0, gamma, M, LifeValue.zero(M))

    def to_json(self, **extra):
        phi_digits = self.phi.to_json() if self.phi is not None else None
        return TransformExport(
            phi=self.phi_value, phi_digits=phi_digits, psi=self.psi, N=float(self.N), **extra
        ).model_dump()


def params_from_trajectory(traj, gamma, M=2):
    """phi = prefix phase of the actions, psi = sum gamma^i g_i, N = len(traj)."""
    phi = prefix_phase(list(traj.actions), M)
    psi = float(sum(gamma ** i * c for i, c in enumerate(traj.costs)))
    return TransformParams(phi.value, psi, len(traj.actions), gamma, M, phi)


def compose_params(first, second):
    """
    Parameters of the concatenated prefix (first, then second).

    psi = psi_1 + gamma^N1 psi_2, phi = phi_1 + M^-N1 phi_2, N = N1 + N2
    """
    if first.M != second.M or first.gamma != second.gamma:
        raise ConfigError("paramètres de bases ou d'actualisations différentes")
    psi = first.psi + first.gamma ** first.N * second.psi
    phi = None
    if first.phi is not None and second.phi is not None and first.integral and second.integral:
        phi = concat(first.phi, second.phi)
        phi_value = phi.value
    else:
        phi_value = first.phi_value + float(first.M) ** -first.N * second.phi_value
    return TransformParams(phi_value, psi, first.N + second.N, first.gamma, first.M, phi)


def _life_argument(l):
    if isinstance(l, LifeValue):
        return l
    l = np.atleast_1d(np.asarray(l, dtype=float))
    if np.any(l < 0.0) or np.any(l >= 1.0):
        raise DomainError("l hors de [0,1)")
    return l


def apply_transform(base, params, l, x0=None):
    """
    Evaluate S(l, x_N) through the representation of S(., x0).

    A LifeValue argument with digit-exact params is mapped by digit
    concatenation when the base accepts digit strings (rollout evaluators).

    Raises:
        DomainError: l / M^N + phi >= 1
    """
    bound = bind_rep(base, x0)
    l = _life_argument(l)
    scale = params.gamma ** params.N
    if isinstance(l, LifeValue):
        if params.phi is not None and params.integral and hasattr(bound, "score_lives"):
            value = float(bound.score_lives([concat(params.phi, l)])[0])
            return (value - params.psi) / scale
        l = np.array([l.value])
        scalar = True
    else:
        scalar = False
    argument = l * float(params.M) ** -params.N + params.phi_value
    if np.any(argument >= 1.0):
        raise DomainError(f"argument transformé >= 1 (max {float(np.max(argument)):.6g})")
    values = (np.asarray(bound.score(argument), dtype=float) - params.psi) / scale
    return float(values[0]) if scalar else values


@dataclass
class TransformFit:
    params: TransformParams
    residual: float
    continuous: TransformParams
    continuous_residual: float
    snapped_N: int
    snapped_residual: float
    snapped: bool
    reliable: bool
    trace: list = field(default_factory=list, repr=False)

    def to_json(self):
        return self.params.to_json(
            residual=self.residual,
            N_snapped=self.snapped_N,
            residual_snapped=self.snapped_residual,
            snapped=self.snapped,
            reliable=self.reliable,
        )


class _Objective:
    """Sampled residuals of the transform model against the downstream samples."""

    def __init__(self, base, l, y, gamma, M):
        self.base = base
        self.l = l
        self.y = y
        self.gamma = gamma
        self.M = M

    def base_values(self, phi, N):
        argument = np.clip(self.l * float(self.M) ** -N + phi, 0.0, 1.0)
        return np.asarray(self.base.score(argument), dtype=float)

    def residuals(self, theta):
        phi, psi, N = theta
        return (self.base_values(phi, N) - psi) / self.gamma ** N - self.y

    def rms(self, theta):
        return float(np.sqrt(np.mean(self.residuals(theta) ** 2)))

    def profile_psi(self, phi, N):
        """Best psi for fixed (phi, N) in closed form, with its rms."""
        psi = float(np.mean(self.base_values(phi, N) - self.gamma ** N * self.y))
        return psi, self.rms((phi, psi, N))


def _key(residual, N):
    return (0.0 if residual < TIE_TOL else residual, N)


def _lattice(objective, N_values, M):
    """Scan the digit-exact phases k / M^N for each integer N."""
    best = None
    for N in N_values:
        count = M ** N
        if count > LATTICE_MAX_POINTS:
            break
        for k in range(count):
            phi = k / count
            psi, res = objective.profile_psi(phi, N)
            if best is None or _key(res, N) < _key(best[1], best[0][2]):
                best = ((phi, psi, float(N)), res)
    return best


def _refit_fixed_N(objective, N, phi0, psi_bound):
    candidates = []
    lattice = _lattice(objective, [N], objective.M)
    if lattice is not None:
        candidates.append(lattice[0][:2])
    candidates.append((phi0, objective.profile_psi(phi0, N)[0]))
    best = None
    for phi, psi in candidates:
        phi = float(np.clip(phi, 0.0, PHI_UPPER))
        psi = float(np.clip(psi, -psi_bound, psi_bound))
        result = least_squares(
            lambda t: objective.residuals((t[0], t[1], N)),
            np.array([phi, psi]),
            bounds=([0.0, -psi_bound], [PHI_UPPER, psi_bound]),
            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000,
        )
        # the local solve may drift off an exact lattice phase
        for point in ((phi, psi), (float(result.x[0]), float(result.x[1]))):
            res = objective.rms((point[0], point[1], N))
            if best is None or res < best[1]:
                best = (point, res)
    return best


@PerformanceMonitor.time_function
def fit_params(base, target, n_samples=32, seed=0, gamma=None, M=None, g_max=None,
               x0=None, xN=None, starts=8, lattice_depth=6, threshold=1e-6):
    """
    Recover (phi, psi, N) by sampled least squares when the prefix is unknown.

    Search: digit-exact lattice scan over integer N <= lattice_depth, then
    multistart bounded least squares over the box phi in [0,1), |psi| <=
    G_max / (1 - gamma), N in (0, 64], then a nearest-integer snap of N with
    (phi, psi) refitted. The snap is kept unless it worsens the residual by
    more than 10%.

    Args:
        base: representation (or evaluator) of S(., x0)
        target: representation (or evaluator) of S(., x_N)
        n_samples: number of l_i ~ Uniform(0,1), at least 3
        gamma, M: taken from the evaluators when they expose them
        g_max: stage-cost bound for the psi box (data-driven box if None)

    Raises:
        FitError: every local solve stopped without converging and the best
            residual is above the threshold
    """
    if n_samples < 3:
        raise ConfigError(f"au moins 3 échantillons requis (reçu {n_samples})")
    bound_base = bind_rep(base, x0)
    bound_target = bind_rep(target, xN)
    env = getattr(base, "env", None) or getattr(getattr(bound_base, "evaluator", None), "env", None)
    if gamma is None and env is not None:
        gamma = env.gamma
    if g_max is None and env is not None:
        g_max = env.g_max
    if gamma is None:
        raise ConfigError("gamma requis pour ajuster une transformation")
    M = M or getattr(bound_base, "M", 2)

    rng = np.random.default_rng(seed)
    l = rng.uniform(0.0, 1.0, n_samples)
    y = np.asarray(bound_target.score(l), dtype=float)
    objective = _Objective(bound_base, l, y, gamma, M)

    if g_max is not None:
        psi_bound = float(g_max) / (1.0 - gamma)
    else:
        psi_bound = 10.0 * (float(np.max(np.abs(y))) + float(np.max(np.abs(bound_base.score(l))))) + 1.0

    lower = np.array([0.0, -psi_bound, N_BOUNDS[0]])
    upper = np.array([PHI_UPPER, psi_bound, N_BOUNDS[1]])
    initial = [np.array([rng.uniform(0.0, 1.0), rng.uniform(-psi_bound, psi_bound) * 0.1, rng.uniform(0.5, 8.0)])
               for _ in range(starts)]
    lattice = _lattice(objective, range(1, lattice_depth + 1), M)
    if lattice is not None:
        initial.insert(0, np.array(lattice[0]))

    trace = []
    runs = []
    for theta0 in initial:
        theta0 = np.clip(theta0, lower, upper)
        result = least_squares(
            objective.residuals, theta0, bounds=(lower, upper),
            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000,
        )
        res = objective.rms(result.x)
        trace.append({"start": theta0.tolist(), "theta": result.x.tolist(), "residual": res, "status": int(result.status)})
        runs.append((result.x, res, result.status))
    if all(status <= 0 for _, _, status in runs) and min(r[1] for r in runs) > threshold:
        if lattice is None or lattice[1] > threshold:
            raise FitError("aucune résolution locale n'a convergé", {"trace": trace})
    if lattice is not None:
        runs.append((np.array(lattice[0]), lattice[1], 1))

    theta, cont_res, _ = min(runs, key=lambda r: _key(r[1], r[0][2]))
    continuous = TransformParams(float(theta[0]), float(theta[1]), float(theta[2]), gamma, M)

    snapped_N = max(1, int(round(continuous.N)))
    (phi_s, psi_s), snap_res = _refit_fixed_N(objective, snapped_N, continuous.phi_value, psi_bound)
    snapped_phi = LifeValue.from_float(phi_s, M, snapped_N) if snapped_N <= 64 else None
    if snapped_phi is not None and abs(snapped_phi.value - phi_s) > 1e-12:
        snapped_phi = None
    snapped_params = TransformParams(phi_s, psi_s, snapped_N, gamma, M, snapped_phi)

    take_snap = snap_res <= (1.0 + SNAP_TOLERANCE) * cont_res + 1e-12
    final, final_res = (snapped_params, snap_res) if take_snap else (continuous, cont_res)
    reliable = final_res <= threshold * (1.0 + float(np.std(y)))
    if not reliable:
        logger.warning(f"Transformation peu fiable: résidu {final_res:.3e}")
    logger.info(
        f"fit_params: N={continuous.N:.4f} (rés. {cont_res:.3e}), "
        f"N arrondi={snapped_N} (rés. {snap_res:.3e}), retenu={'arrondi' if take_snap else 'continu'}"
    )
    return TransformFit(final, final_res, continuous, cont_res, snapped_N, snap_res, take_snap, reliable, trace)

