"""
Life values of a deterministic stationary policy on a finite state space.

L_pi = A L_pi + C_pi with A_ij = 1/M iff x_j = f(x_i, pi(x_i)) and
C_pi,i = kappa(pi(x_i)) / M, hence L_pi = (I - A)^-1 C_pi.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import sparse

from back_end.classe.life_codec import encode
from back_end.utils.exceptions import ConfigError, SystemConstructionError

logger = logging.getLogger(__name__)

DENSE_LIMIT = 10_000
BOUNDARY_TOL = 1e-12


@dataclass
class PolicyLifeSystem:
    states: list
    policy: np.ndarray
    M: int
    A: sparse.csr_matrix
    C: np.ndarray
    successor_index: np.ndarray = field(repr=False)
    solution: np.ndarray = None
    boundary: np.ndarray = None

    @property
    def n_states(self):
        return len(self.states)


def build_system(env, policy):
    """
    Assemble A and C_pi for a finite environment and a total policy.

    Args:
        env: finite EnvModel (exposes `states`)
        policy: sequence or mapping state -> action code

    Raises:
        SystemConstructionError: if a successor leaves the state list
    """
    if not getattr(env, "finite", False):
        raise SystemConstructionError("build_system requiert un environnement fini")
    states = list(env.states)
    position = {s: i for i, s in enumerate(states)}
    if isinstance(policy, dict):
        missing = [s for s in states if s not in policy]
        if missing:
            raise SystemConstructionError(f"politique non définie sur {missing}")
        codes = np.array([env.validate_action(policy[s]) for s in states], dtype=np.int64)
    else:
        codes = np.array([env.validate_action(a) for a in policy], dtype=np.int64)
        if codes.shape[0] != len(states):
            raise SystemConstructionError(f"politique de taille {codes.shape[0]} pour {len(states)} états")

    successor_index = np.zeros(len(states), dtype=np.int64)
    for i, (s, a) in enumerate(zip(states, codes)):
        nxt = env.step(s, int(a))
        if nxt not in position:
            raise SystemConstructionError(f"f({s}, {a}) = {nxt} hors de la liste d'états")
        successor_index[i] = position[nxt]

    n = len(states)
    A = sparse.csr_matrix((np.full(n, 1.0 / env.M), (np.arange(n), successor_index)), shape=(n, n))
    C = codes / env.M
    return PolicyLifeSystem(states, codes, env.M, A, C, successor_index)


def _flag_boundary(system, values):
    boundary = values >= 1.0 - BOUNDARY_TOL
    if np.any(boundary):
        logger.warning(
            f"{int(boundary.sum())} valeur(s) de vie au bord l -> 1 "
            f"(code {system.M - 1} répété indéfiniment): représentées par 1"
        )
    values = np.where(boundary, 1.0, values)
    system.solution = values
    system.boundary = boundary
    return values


def solve(system):
    """Direct dense solve for N_s <= 10^4, fixed-point iteration beyond."""
    if system.n_states > DENSE_LIMIT:
        return solve_iterative(system)
    dense = np.eye(system.n_states) - system.A.toarray()
    values = np.linalg.solve(dense, system.C)
    return _flag_boundary(system, values)


def solve_iterative(system, tol=1e-14, max_iter=10_000):
    """
    Neumann-series iteration L <- A L + C.

    ||A||_inf = 1/M <= 1/2, so the error shrinks by at least half per pass.
    """
    values = np.zeros(system.n_states)
    for _ in range(max_iter):
        updated = system.A @ values + system.C
        delta = float(np.max(np.abs(updated - values))) if system.n_states else 0.0
        values = updated
        if delta < tol:
            break
    else:
        logger.warning(f"solve_iterative: pas de convergence en {max_iter} itérations")
    return _flag_boundary(system, values)


def residual(system, values=None):
    values = system.solution if values is None else values
    return float(np.max(np.abs(values - system.A @ values - system.C)))


def verify_against_rollout(system, env, depth):
    """
    Encode the first `depth` policy actions from every state and compare.

    Returns:
        max |encoded prefix value - L entry|, bounded by M^-depth
    """
    if system.solution is None:
        raise ConfigError("système non résolu")
    discrepancy = 0.0
    for i, s in enumerate(system.states):
        codes = []
        j = i
        for _ in range(depth):
            codes.append(int(system.policy[j]))
            j = int(system.successor_index[j])
        prefix = encode(codes, system.M).value if depth else 0.0
        discrepancy = max(discrepancy, abs(prefix - float(system.solution[i])))
    return discrepancy


def read_policy_csv(path):
    """`state_index,action_code` CSV -> dict."""
    frame = pd.read_csv(path)
    expected = {"state_index", "action_code"}
    if not expected.issubset(frame.columns):
        raise ConfigError(f"colonnes attendues {sorted(expected)}, reçues {list(frame.columns)}")
    return {int(s): int(a) for s, a in zip(frame["state_index"], frame["action_code"])}


def life_frame(system):
    return pd.DataFrame({
        "state_index": system.states,
        "life_value": system.solution,
        "boundary": system.boundary,
    })


def write_life_csv(system, path):
    """Write `state_index,life_value` rows (boundary states carry 1.0)."""
    if system.solution is None:
        raise ConfigError("système non résolu")
    frame = life_frame(system)[["state_index", "life_value"]]
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Valeurs de vie écrites dans {path}")
    return frame
