"""
Ground-truth Score-life evaluation by truncated rollout, recursion residuals,
the tabular fixed-point sweep and grid-based optimal-cost extraction.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree

from back_end.classe.life_codec import (
    LifeValue,
    digits_to_values,
    grid_digits,
    lives_to_digits,
    sample_digits,
    shift,
    values_to_digits,
)
from back_end.utils.exceptions import ConfigError
from back_end.utils.monitoring import PerformanceMonitor

logger = logging.getLogger(__name__)


def tail_bound(gamma, g_max, n):
    """gamma^(n+1) * G_max / (1 - gamma): error of cutting the sum after step n."""
    return gamma ** (n + 1) * g_max / (1.0 - gamma)


def default_horizon(gamma, g_max, tol=1e-6, cap=5000):
    """Smallest n whose tail bound is below tol."""
    if g_max <= 0:
        return 0
    n = max(0, math.ceil(math.log(tol * (1.0 - gamma) / g_max) / math.log(gamma)) - 1)
    while tail_bound(gamma, g_max, n) >= tol:
        n += 1
    if n > cap:
        raise ConfigError(f"horizon {n} > {cap} pour gamma={gamma}, tol={tol}")
    return n


class TruncatedEvaluator:
    """
    S_n(l, x) = sum_{k=0}^{n} gamma^k g(x_k, u_k) along the digits of l.

    Digits missing beyond the stored ones are taken as 0 (action code 0).
    """

    def __init__(self, env, horizon=None, tol=1e-6):
        self.env = env
        self.horizon = default_horizon(env.gamma, env.g_max, tol) if horizon is None else int(horizon)
        if self.horizon < 0:
            raise ConfigError(f"horizon négatif: {self.horizon}")

    @property
    def M(self):
        return self.env.M

    @property
    def gamma(self):
        return self.env.gamma

    @property
    def depth(self):
        """Digits consumed by one evaluation."""
        return self.horizon + 1

    @property
    def tail_bound(self):
        return tail_bound(self.env.gamma, self.env.g_max, self.horizon)

    def eval_batch(self, digits, states, n=None):
        """
        Vectorised truncated sums.

        Args:
            digits: int array (B, >= 0) of action codes
            states: batch of B initial states (env batch layout)
            n: horizon (defaults to self.horizon)

        Returns:
            float array (B,)
        """
        n = self.horizon if n is None else int(n)
        digits = np.atleast_2d(np.asarray(digits, dtype=np.int64))
        if digits.shape[1] < n + 1:
            pad = np.zeros((digits.shape[0], n + 1 - digits.shape[1]), dtype=np.int64)
            digits = np.hstack([digits, pad])
        total = np.zeros(digits.shape[0])
        discount = 1.0
        x = states
        for k in range(n + 1):
            u = digits[:, k]
            total += discount * self.env.cost_batch(x, u)
            x = self.env.step_batch(x, u)
            discount *= self.env.gamma
        return total

    def eval_digits(self, digits, x0, n=None):
        digits = np.atleast_2d(np.asarray(digits, dtype=np.int64))
        return self.eval_batch(digits, self.env.initial_batch(x0, digits.shape[0]), n)

    def eval_values(self, values, x0, n=None):
        n = self.horizon if n is None else int(n)
        return self.eval_digits(values_to_digits(values, self.M, n + 1), x0, n)

    def eval(self, life, x0, n=None):
        """Truncated Score-life value of one life value at x0."""
        n = self.horizon if n is None else int(n)
        return float(self.eval_digits(lives_to_digits([life], n + 1), x0, n)[0])

    def theorem1_residual(self, life, x, n=None):
        """|S_n(l,x) - g(x,u0) - gamma S_{n-1}(l', f(x,u0))| with (u0, l') = shift(l)."""
        n = self.horizon if n is None else int(n)
        if n < 1:
            raise ConfigError("theorem1_residual requiert n >= 1")
        life = life.padded(n + 1)
        head, tail = shift(life)
        x = self.env.as_state(x)
        lhs = self.eval(life, x, n)
        rhs = self.env.cost(x, head.index) + self.env.gamma * self.eval(tail, self.env.step(x, head.index), n - 1)
        return abs(lhs - rhs)

    def theorem1_residuals(self, lives, states, n=None):
        """Batched residuals for LifeValue objects paired with rows of states."""
        n = self.horizon if n is None else int(n)
        if n < 1:
            raise ConfigError("theorem1_residuals requiert n >= 1")
        lives = [life.padded(n + 1) for life in lives]
        split = [shift(life) for life in lives]
        head = np.array([h.index for h, _ in split], dtype=np.int64)
        tails = lives_to_digits([t for _, t in split], n)
        lhs = self.eval_batch(lives_to_digits(lives, n + 1), states, n)
        rhs = self.env.cost_batch(states, head) + self.env.gamma * self.eval_batch(
            tails, self.env.step_batch(states, head), n - 1
        )
        return np.abs(lhs - rhs)

    def at(self, x):
        return RolloutScore(self, self.env.as_state(x))


@dataclass
class RolloutScore:
    """Truncated evaluator bound to one state; usable as a Score-life representation."""

    evaluator: TruncatedEvaluator
    state: object

    @property
    def M(self):
        return self.evaluator.M

    def score(self, l):
        return self.evaluator.eval_values(np.atleast_1d(l), self.state)

    def score_lives(self, lives):
        digits = lives_to_digits(lives, self.evaluator.depth)
        return self.evaluator.eval_digits(digits, self.state)

    def __call__(self, l):
        return self.score(l)


# -- Table (grille dyadique x région finie) ------------------------------------

@dataclass
class TabularScore:
    """
    S[x][l] on a finite region X_f and the complete depth-d base-M grid.

    Successors leaving X_f are projected onto their nearest region state; the
    number of projected (state, action) pairs is kept in `projections`.
    """

    env: object
    region: np.ndarray
    depth: int
    table: np.ndarray
    stage_costs: np.ndarray = field(repr=False)
    successors: np.ndarray = field(repr=False)
    projections: int = 0

    @classmethod
    def build(cls, env, depth, region=None, init=0.0):
        if depth < 1:
            raise ConfigError(f"profondeur de grille >= 1 requise (reçu {depth})")
        if region is None:
            if not env.finite:
                raise ConfigError("une région X_f explicite est requise pour un environnement continu")
            region = env.states
        region = np.asarray(region)
        n_region = region.shape[0]
        points = np.asarray(region, dtype=float).reshape(n_region, -1)
        tree = cKDTree(points)
        stage_costs = np.zeros((n_region, env.M))
        successors = np.zeros((n_region, env.M), dtype=np.int64)
        projections = 0
        for a in range(env.M):
            actions = np.full(n_region, a, dtype=np.int64)
            stage_costs[:, a] = env.cost_batch(region, actions)
            nxt = np.asarray(env.step_batch(region, actions), dtype=float).reshape(n_region, -1)
            dist, idx = tree.query(nxt)
            successors[:, a] = idx
            projections += int(np.count_nonzero(dist > 0))
        if projections:
            logger.warning(f"TabularScore: {projections} successeur(s) projeté(s) sur X_f")
        table = np.full((n_region, env.M ** depth), float(init))
        return cls(env, region, depth, table, stage_costs, successors, projections)

    def row_of(self, x):
        points = np.asarray(self.region, dtype=float).reshape(self.region.shape[0], -1)
        target = np.asarray(self.env.as_state(x), dtype=float).reshape(1, -1)
        return int(np.argmin(np.sum((points - target) ** 2, axis=1)))

    def grid_values(self):
        return digits_to_values(grid_digits(self.env.M, self.depth), self.env.M)

    def at(self, x):
        return TabularRow(self, self.row_of(x))


@dataclass
class TabularRow:
    """One state's row of a TabularScore, evaluated by grid lookup (floor)."""

    tabular: TabularScore
    row: int

    @property
    def M(self):
        return self.tabular.env.M

    def score(self, l):
        size = self.M ** self.tabular.depth
        idx = np.minimum(np.floor(np.atleast_1d(l) * size).astype(np.int64), size - 1)
        return self.tabular.table[self.row, idx]


def tabular_sweep(ts):
    """
    One Jacobi sweep of S(l,x) <- g(x, u0) + gamma S({M l}, f(x, u0)).

    The shifted grid point has depth d-1 and is looked up with a trailing zero.

    Returns:
        (new TabularScore, sup-norm change)
    """
    M = ts.env.M
    size = M ** ts.depth
    idx = np.arange(size)
    block = M ** (ts.depth - 1)
    head = idx // block
    tail = (idx % block) * M
    new_table = ts.stage_costs[:, head] + ts.env.gamma * ts.table[ts.successors[:, head], tail[np.newaxis, :]]
    delta = float(np.max(np.abs(new_table - ts.table)))
    new_ts = TabularScore(ts.env, ts.region, ts.depth, new_table, ts.stage_costs, ts.successors, ts.projections)
    return new_ts, delta


@dataclass
class TabularRun:
    tabular: TabularScore
    deltas: list
    stop_reason: str


@PerformanceMonitor.time_function
def run_tabular(ts, tol=1e-9, max_sweeps=10000):
    """Sweep until the sup-norm change drops below tol or the sweep cap fires."""
    deltas = []
    for _ in range(max_sweeps):
        ts, delta = tabular_sweep(ts)
        deltas.append(delta)
        if delta < tol:
            logger.info(f"Tableau convergé en {len(deltas)} balayages (delta={delta:.3e})")
            return TabularRun(ts, deltas, "tolerance")
    logger.warning(f"Plafond de {max_sweeps} balayages atteint (delta={deltas[-1]:.3e})")
    return TabularRun(ts, deltas, "sweep_cap")


# -- Minimum sur grille --------------------------------------------------------

def bind_rep(rep, x=None):
    """Representations that need a state expose `at(x)`; bound ones are used as-is."""
    if hasattr(rep, "at") and x is not None:
        return rep.at(x)
    return rep


def grid_argmin(rep, x, depth, M=2):
    """
    Exhaustive minimum over the M^depth dyadic grid (smallest l wins ties).

    Returns:
        (l* as LifeValue, J*)
    """
    bound = bind_rep(rep, x)
    M = getattr(bound, "M", M)
    digits = grid_digits(M, depth)
    values = bound.score(digits_to_values(digits, M))
    best = int(np.argmin(values))
    return LifeValue(tuple(digits[best]), M), float(values[best])


def extract_policy(l_star):
    """kappa^-1(floor(M l*)): the first action of the optimal sequence."""
    head, _ = shift(l_star)
    return head


def brute_force_min(env, x, depth):
    """
    Enumerate every depth-long action sequence (truncated sum over `depth` steps).

    Returns:
        (best digits as LifeValue, best value, all values in grid order)
    """
    evaluator = TruncatedEvaluator(env, horizon=depth - 1)
    digits = grid_digits(env.M, depth)
    values = evaluator.eval_digits(digits, x)
    best = int(np.argmin(values))
    return LifeValue(tuple(digits[best]), env.M), float(values[best]), values


def sample_score_curve(evaluator, x, samples=1000, seed=0, mode="uniform", depth=10):
    """
    Monte-Carlo (uniform l) or dyadic-grid samples of S(., x).

    Returns:
        DataFrame with columns l, S sorted by l
    """
    if mode == "dyadic":
        digits = grid_digits(evaluator.M, depth)
    elif mode == "uniform":
        rng = np.random.default_rng(seed)
        digits = sample_digits(rng, evaluator.M, evaluator.depth, samples)
    else:
        raise ConfigError(f"mode d'échantillonnage inconnu: {mode}")
    values = evaluator.eval_digits(digits, x)
    frame = pd.DataFrame({"l": digits_to_values(digits, evaluator.M), "S": values})
    return frame.sort_values("l", kind="mergesort").reset_index(drop=True)
