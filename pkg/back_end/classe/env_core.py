"""
Deterministic environments: dynamics f, stage cost g, action set U, discount.

Two built-ins: the native cartpole (Gym-compatible constants) and small finite
MDPs (cyclic, constant-cost, two-state) used as brute-force oracles.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from back_end.classe.life_codec import ActionCode, check_base
from back_end.utils.config import CARTPOLE_CONSTANTS
from back_end.utils.exceptions import (
    ConfigError,
    EnvironmentStateError,
    InvalidActionError,
)

logger = logging.getLogger(__name__)

COST_KINDS = ("quadratic", "reward")


class EnvModel(ABC):
    """Deterministic control problem x_{k+1} = f(x_k, u_k) with discounted cost."""

    name = "env"
    state_labels = ("state",)
    finite = False

    def __init__(self, M, gamma, g_max):
        self.M = check_base(M)
        if not 0.0 < gamma < 1.0:
            raise ConfigError(f"gamma doit être dans (0,1): {gamma}")
        self.gamma = float(gamma)
        self.g_max = float(g_max)

    def validate_action(self, u):
        if isinstance(u, ActionCode):
            if u.M != self.M:
                raise InvalidActionError(f"code de base {u.M} pour un environnement M={self.M}")
            return u.index
        u = int(u)
        if not 0 <= u < self.M:
            raise InvalidActionError(f"action {u} invalide (M={self.M})")
        return u

    @abstractmethod
    def step(self, x, u):
        """f(x, u)"""

    @abstractmethod
    def cost(self, x, u):
        """g(x, u)"""

    def reward(self, x, u):
        return -self.cost(x, u)

    def is_terminal(self, x):
        return False

    def as_state(self, x):
        return x

    def step_batch(self, states, actions):
        return np.array([self.step(x, int(u)) for x, u in zip(states, actions)])

    def cost_batch(self, states, actions):
        return np.array([self.cost(x, int(u)) for x, u in zip(states, actions)], dtype=float)

    def initial_batch(self, x0, count):
        x0 = self.as_state(x0)
        return np.repeat(np.asarray(x0)[np.newaxis, ...], count, axis=0)

    def describe(self):
        return {"env": self.name, "M": self.M, "gamma": self.gamma, "g_max": self.g_max}


# -- MDP finis ----------------------------------------------------------------

class TabularMDP(EnvModel):
    """Finite deterministic MDP given by successor and cost tables of shape (n, M)."""

    name = "tabular"
    finite = True

    def __init__(self, transitions, costs, gamma, g_max=None, name=None):
        transitions = np.asarray(transitions, dtype=np.int64)
        costs = np.asarray(costs, dtype=float)
        if transitions.ndim != 2 or transitions.shape != costs.shape:
            raise ConfigError("tables de transitions et de coûts incompatibles")
        n_states, M = transitions.shape
        if np.any(transitions < 0) or np.any(transitions >= n_states):
            raise ConfigError("transition hors de l'espace d'états")
        super().__init__(M, gamma, np.max(np.abs(costs)) if g_max is None else g_max)
        self.transitions = transitions
        self.costs = costs
        self.n_states = n_states
        if name:
            self.name = name

    @property
    def states(self):
        return list(range(self.n_states))

    def as_state(self, x):
        x = int(x)
        if not 0 <= x < self.n_states:
            raise EnvironmentStateError(f"état {x} hors de [0, {self.n_states - 1}]")
        return x

    def step(self, x, u):
        return int(self.transitions[self.as_state(x), self.validate_action(u)])

    def cost(self, x, u):
        return float(self.costs[self.as_state(x), self.validate_action(u)])

    def step_batch(self, states, actions):
        return self.transitions[np.asarray(states, dtype=np.int64), np.asarray(actions, dtype=np.int64)]

    def cost_batch(self, states, actions):
        return self.costs[np.asarray(states, dtype=np.int64), np.asarray(actions, dtype=np.int64)]

    def initial_batch(self, x0, count):
        return np.full(count, self.as_state(x0), dtype=np.int64)

    def describe(self):
        info = super().describe()
        info["n_states"] = self.n_states
        return info


def cycle_mdp(n_states, gamma=0.5, cost_offset=0.0):
    """
    Cyclic oracle MDP: a0: x -> x+1 mod n, a1: x -> x+2 mod n, g(x,u) = x.

    Args:
        n_states: number of states (>= 2)
        gamma: discount factor
        cost_offset: constant added to every stage cost
    """
    if n_states < 2:
        raise ConfigError(f"cycle_mdp requiert n_states >= 2 (reçu {n_states})")
    x = np.arange(n_states)
    transitions = np.stack([(x + 1) % n_states, (x + 2) % n_states], axis=1)
    costs = np.repeat((x + cost_offset)[:, np.newaxis].astype(float), 2, axis=1)
    env = TabularMDP(transitions, costs, gamma, name="cycle")
    env.g_max = float(max(abs(cost_offset), abs(n_states - 1 + cost_offset)))
    return env


def constant_mdp(cost=1.0, gamma=0.5, M=2):
    """Single self-looping state with g = cost for every action."""
    transitions = np.zeros((1, M), dtype=np.int64)
    costs = np.full((1, M), float(cost))
    return TabularMDP(transitions, costs, gamma, name="constant")


def two_state_fixture(gamma=0.5):
    """Two states; code 0 leads to state 0, code 1 to state 1, g(x,u) = x."""
    transitions = np.array([[0, 1], [0, 1]])
    costs = np.array([[0.0, 0.0], [1.0, 1.0]])
    return TabularMDP(transitions, costs, gamma, name="two_state")


# -- Cartpole -----------------------------------------------------------------

@dataclass(frozen=True)
class CartpoleState:
    x: float
    xdot: float
    theta: float
    thetadot: float

    def as_array(self):
        return np.array([self.x, self.xdot, self.theta, self.thetadot], dtype=float)

    @classmethod
    def from_array(cls, values):
        values = np.asarray(values, dtype=float)
        return cls(*(float(v) for v in values))


def _cartpole_derivatives(states, force, constants):
    """Accelerations of the standard cart-pole equations (batched over rows)."""
    total_mass = constants["masspole"] + constants["masscart"]
    polemass_length = constants["masspole"] * constants["length"]
    theta = states[:, 2]
    thetadot = states[:, 3]
    costheta = np.cos(theta)
    sintheta = np.sin(theta)
    temp = (force + polemass_length * thetadot ** 2 * sintheta) / total_mass
    thetaacc = (constants["gravity"] * sintheta - costheta * temp) / (
        constants["length"] * (4.0 / 3.0 - constants["masspole"] * costheta ** 2 / total_mass)
    )
    xacc = temp - polemass_length * thetaacc * costheta / total_mass
    return xacc, thetaacc


def _euler(states, actions, constants):
    force = np.where(np.asarray(actions) == 1, constants["force_mag"], -constants["force_mag"])
    xacc, thetaacc = _cartpole_derivatives(states, force, constants)
    tau = constants["tau"]
    nxt = np.empty_like(states)
    nxt[:, 0] = states[:, 0] + tau * states[:, 1]
    nxt[:, 1] = states[:, 1] + tau * xacc
    nxt[:, 2] = states[:, 2] + tau * states[:, 3]
    nxt[:, 3] = states[:, 3] + tau * thetaacc
    return nxt


def cartpole_step(state, u, constants=None):
    """
    One explicit-Euler step of the cart-pole.

    Args:
        state: CartpoleState or array [x, xdot, theta, thetadot]
        u: 0 (force -10 N) or 1 (force +10 N)

    Returns:
        Next state as a numpy array
    """
    constants = constants or CARTPOLE_CONSTANTS
    s = state.as_array() if isinstance(state, CartpoleState) else np.asarray(state, dtype=float)
    if s.shape != (4,) or not np.all(np.isfinite(s)):
        raise EnvironmentStateError(f"état cartpole invalide: {s}")
    u = int(u)
    if u not in (0, 1):
        raise InvalidActionError(f"action cartpole {u} invalide")
    return _euler(s[np.newaxis, :], np.array([u]), constants)[0]


def quadratic_cost(state, q_diag=None):
    """x^T Q x with Q = diag(2, 1, 8, 1)."""
    q = np.asarray(CARTPOLE_CONSTANTS["q_diag"] if q_diag is None else q_diag, dtype=float)
    s = state.as_array() if isinstance(state, CartpoleState) else np.asarray(state, dtype=float)
    return float(np.sum(q * s ** 2))


def cartpole_valid(state, constants=None):
    constants = constants or CARTPOLE_CONSTANTS
    s = state.as_array() if isinstance(state, CartpoleState) else np.asarray(state, dtype=float)
    return bool(abs(s[0]) <= constants["x_threshold"] and abs(s[2]) <= constants["theta_threshold"])


def reward_cost(state, constants=None):
    """-1 while the episode is valid, 0 once terminated."""
    return -1.0 if cartpole_valid(state, constants) else 0.0


class CartpoleEnv(EnvModel):
    """
    Cart-pole with absorbing termination.

    Terminated states do not move. Under the reward cost they cost 0; under the
    quadratic cost they cost G_max, and valid-state quadratic costs are clipped
    at G_max so the declared bound holds everywhere.
    """

    name = "cartpole"
    state_labels = ("x", "xdot", "theta", "thetadot")

    def __init__(self, gamma=0.8, cost_kind="quadratic", constants=None):
        if cost_kind not in COST_KINDS:
            raise ConfigError(f"coût inconnu: {cost_kind} (attendu {COST_KINDS})")
        self.constants = dict(CARTPOLE_CONSTANTS, **(constants or {}))
        self.cost_kind = cost_kind
        self.q_diag = np.asarray(self.constants["q_diag"], dtype=float)
        super().__init__(2, gamma, self._g_max())

    def _g_max(self):
        if self.cost_kind == "reward":
            return 1.0
        c = self.constants
        box = np.array([c["x_threshold"], c["xdot_bound"], c["theta_threshold"], c["thetadot_bound"]])
        return float(np.sum(self.q_diag * box ** 2))

    def as_state(self, x):
        s = x.as_array() if isinstance(x, CartpoleState) else np.asarray(x, dtype=float)
        if s.shape != (4,) or not np.all(np.isfinite(s)):
            raise EnvironmentStateError(f"état cartpole invalide: {s}")
        return s

    def _terminal_mask(self, states):
        c = self.constants
        return (np.abs(states[:, 0]) > c["x_threshold"]) | (np.abs(states[:, 2]) > c["theta_threshold"])

    def is_terminal(self, x):
        return bool(self._terminal_mask(self.as_state(x)[np.newaxis, :])[0])

    def step(self, x, u):
        s = self.as_state(x)
        u = self.validate_action(u)
        if self.is_terminal(s):
            return s.copy()
        return cartpole_step(s, u, self.constants)

    def cost(self, x, u):
        self.validate_action(u)
        return float(self.cost_batch(self.as_state(x)[np.newaxis, :], np.array([u]))[0])

    def reward(self, x, u):
        return 0.0 if self.is_terminal(x) else 1.0

    def step_batch(self, states, actions):
        states = np.asarray(states, dtype=float)
        nxt = _euler(states, actions, self.constants)
        terminal = self._terminal_mask(states)
        nxt[terminal] = states[terminal]
        return nxt

    def cost_batch(self, states, actions):
        states = np.asarray(states, dtype=float)
        terminal = self._terminal_mask(states)
        if self.cost_kind == "reward":
            return np.where(terminal, 0.0, -1.0)
        quad = np.minimum(np.sum(self.q_diag * states ** 2, axis=1), self.g_max)
        return np.where(terminal, self.g_max, quad)

    def sample_initial_state(self, rng):
        c = self.constants
        return rng.uniform(c["reset_low"], c["reset_high"], size=4)

    def describe(self):
        info = super().describe()
        info["cost"] = self.cost_kind
        info.update({k: v for k, v in self.constants.items() if k != "q_diag"})
        info["q_diag"] = list(self.constants["q_diag"])
        return info


def make_env(name, gamma, cost_kind="quadratic", n_states=3):
    """Build an environment from its config name."""
    if name == "cartpole":
        return CartpoleEnv(gamma=gamma, cost_kind=cost_kind)
    if name == "cycle":
        return cycle_mdp(n_states, gamma=gamma)
    if name == "constant":
        return constant_mdp(1.0, gamma=gamma)
    if name == "two_state":
        return two_state_fixture(gamma=gamma)
    raise ConfigError(f"environnement inconnu: {name}")


# -- Trajectoires -------------------------------------------------------------

@dataclass
class Trajectory:
    """Aligned states, actions and stage costs; |states| = |actions| + 1."""

    states: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    costs: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    terminated: bool = False

    @property
    def cumulative_reward(self):
        return float(sum(self.rewards))

    @property
    def final_state(self):
        return self.states[-1]

    def __len__(self):
        return len(self.actions)

    def discounted_cost(self, gamma):
        return float(sum(gamma ** k * c for k, c in enumerate(self.costs)))

    def to_frame(self, state_labels=("state",)):
        """One row per visited state; the final row carries no action."""
        rows = []
        cum = 0.0
        for t, state in enumerate(self.states):
            values = np.atleast_1d(np.asarray(state, dtype=float))
            row = {"t": t}
            for label, v in zip(state_labels, values):
                row[label] = v
            if t < len(self.actions):
                cum += self.rewards[t]
                row.update(action=int(self.actions[t]), stage_cost=self.costs[t], cum_reward=cum)
            else:
                row.update(action=pd.NA, stage_cost=pd.NA, cum_reward=cum)
            rows.append(row)
        columns = ["t", *state_labels, "action", "stage_cost", "cum_reward"]
        return pd.DataFrame(rows, columns=columns)


def rollout(env, x0, actions, stop_on_termination=True):
    """
    Apply an action sequence from x0.

    Stops early (and sets `terminated`) when the environment's termination
    predicate fires on a reached state.
    """
    x = env.as_state(x0)
    traj = Trajectory(states=[x])
    for a in actions:
        u = env.validate_action(a)
        traj.costs.append(env.cost(x, u))
        traj.rewards.append(env.reward(x, u))
        x = env.step(x, u)
        traj.actions.append(u)
        traj.states.append(x)
        if stop_on_termination and env.is_terminal(x):
            traj.terminated = True
            logger.debug(f"rollout: terminaison après {len(traj)} pas")
            break
    return traj
