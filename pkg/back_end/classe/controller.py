"""
Closed-loop control with Score-life representations.

run_exact: fit a Faber-Schauder representation at the current state, minimise
it, apply the first P decoded actions, replan.
run_approx: at every step fit a polynomial for each successor and pick the
action with the one-step Bellman rule.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from back_end.classe import faber_schauder as fs
from back_end.classe.env_core import Trajectory, make_env
from back_end.classe.fractal_opt import multistart_min
from back_end.classe.life_codec import LifeValue, decode_prefix
from back_end.classe.poly_approx import bellman_values, fit_poly, transform_poly
from back_end.classe.rollout import TruncatedEvaluator
from back_end.classe.transform import TransformParams
from back_end.utils.config import CARTPOLE_CONSTANTS, worker_count
from back_end.utils.exceptions import ScoreLifeError
from back_end.utils.monitoring import PerformanceMonitor
from modeles.experiment import OptimizerConfig

logger = logging.getLogger(__name__)

FRAME_COLUMNS = ["seed", "method", "t", "action", "stage_cost", "cum_reward", "replan_id", "fit_ms", "opt_ms"]


@dataclass
class ReplanRecord:
    replan_id: int
    t: int
    codes: list
    fit_ms: float = 0.0
    opt_ms: float = 0.0
    l_star: float = None
    value: float = None
    seed: int = None
    fallback: str = None


@dataclass
class EpisodeResult:
    method: str
    trajectory: Trajectory
    replans: list = field(default_factory=list)
    step_replan: list = field(default_factory=list)
    seed: int = 0
    x0: tuple = None

    @property
    def steps_survived(self):
        return len(self.trajectory)

    @property
    def cumulative_reward(self):
        return self.trajectory.cumulative_reward

    @property
    def replan_count(self):
        return len(self.replans)

    @property
    def fallbacks(self):
        return sum(1 for r in self.replans if r.fallback)

    @property
    def step_ms(self):
        """Mean fit + optimisation time per applied step."""
        if not self.steps_survived:
            return 0.0
        return sum(r.fit_ms + r.opt_ms for r in self.replans) / self.steps_survived

    def to_frame(self):
        by_id = {r.replan_id: r for r in self.replans}
        rows = []
        cum = 0.0
        for t, (action, cost, reward) in enumerate(zip(self.trajectory.actions, self.trajectory.costs, self.trajectory.rewards)):
            cum += reward
            record = by_id[self.step_replan[t]]
            rows.append({
                "seed": self.seed,
                "method": self.method,
                "t": t,
                "action": int(action),
                "stage_cost": cost,
                "cum_reward": cum,
                "replan_id": record.replan_id,
                "fit_ms": record.fit_ms,
                "opt_ms": record.opt_ms,
            })
        return pd.DataFrame(rows, columns=FRAME_COLUMNS)

    def summary(self):
        return {
            "seed": self.seed,
            "method": self.method,
            "steps": self.steps_survived,
            "cum_reward": self.cumulative_reward,
            "replans": self.replan_count,
            "fallbacks": self.fallbacks,
            "terminated": self.trajectory.terminated,
            "step_ms": self.step_ms,
        }


def _apply(env, traj, x, code):
    traj.costs.append(env.cost(x, code))
    traj.rewards.append(env.reward(x, code))
    x = env.step(x, code)
    traj.actions.append(code)
    traj.states.append(x)
    if env.is_terminal(x):
        traj.terminated = True
    return x


def run_exact(env, x0, order=fs.DEFAULT_ORDER, opt_cfg=None, prefix=10, episode_cap=500,
              horizon=None, seed=0):
    """
    Exact method: FS fit, multistart minimisation, P-action prefix, replan.

    Fit or optimisation failures are logged, the replan applies code 0 for
    its P steps and the episode continues.
    """
    opt_cfg = opt_cfg or OptimizerConfig()
    evaluator = TruncatedEvaluator(env, horizon)
    x = env.as_state(x0)
    traj = Trajectory(states=[x])
    result = EpisodeResult("exact", traj, seed=seed, x0=tuple(np.atleast_1d(np.asarray(x, dtype=float))))

    while len(traj) < episode_cap and not traj.terminated:
        replan_id = len(result.replans)
        record = ReplanRecord(replan_id, len(traj), [], seed=opt_cfg.seed + replan_id)
        fit_time = opt_time = {"ms": 0.0}
        try:
            with PerformanceMonitor.timer("controller.exact.fit") as fit_time:
                rep = fs.fit(evaluator, x, order)
            with PerformanceMonitor.timer("controller.exact.opt") as opt_time:
                best = multistart_min(rep, opt_cfg.model_copy(update={"seed": record.seed}))
            life = LifeValue.from_float(best.l_star, env.M, prefix)
            record.codes = [c.index for c in decode_prefix(life, prefix)]
            record.l_star, record.value = best.l_star, best.value
        except ScoreLifeError as e:
            logger.warning(f"Replanification {replan_id}: échec ({e}), code 0 appliqué")
            record.codes = [0] * prefix
            record.fallback = str(e)
        record.fit_ms, record.opt_ms = fit_time["ms"], opt_time["ms"]
        result.replans.append(record)

        for code in record.codes:
            if len(traj) >= episode_cap or traj.terminated:
                break
            x = _apply(env, traj, x, code)
            result.step_replan.append(replan_id)

    logger.info(f"Méthode exacte: {len(traj)} pas, {result.replan_count} replanifications")
    return result


def run_approx(env, x0, degree=2, n_samples=200, seed=0, episode_cap=500, horizon=None,
               use_transform=False):
    """
    Approximate method: per-step polynomial fits and Bellman selection.

    Both successors of a step are fitted on the same l samples. With
    use_transform the polynomial is fitted once at the current state and
    mapped to each successor by the one-step transform. A failed successor
    fit falls back to a grid minimum of the rollout evaluator.
    """
    evaluator = TruncatedEvaluator(env, horizon)
    x = env.as_state(x0)
    traj = Trajectory(states=[x])
    result = EpisodeResult("approx", traj, seed=seed, x0=tuple(np.atleast_1d(np.asarray(x, dtype=float))))

    while len(traj) < episode_cap and not traj.terminated:
        t = len(traj)
        record = ReplanRecord(t, t, [], seed=seed + t)
        reps = []
        with PerformanceMonitor.timer("controller.approx.fit") as fit_time:
            local = None
            if use_transform:
                try:
                    local = fit_poly(evaluator, x, degree, n_samples, record.seed)
                except ScoreLifeError as e:
                    logger.warning(f"Pas {t}: ajustement local impossible ({e})")
            for a in range(env.M):
                successor = env.step(x, a)
                try:
                    if local is not None:
                        params = TransformParams(a / env.M, env.cost(x, a), 1, env.gamma, env.M)
                        reps.append(transform_poly(local, params, env.gamma, env.M, successor))
                    else:
                        reps.append(fit_poly(evaluator, successor, degree, n_samples, record.seed))
                except ScoreLifeError as e:
                    logger.warning(f"Pas {t}, action {a}: repli sur la grille ({e})")
                    record.fallback = str(e)
                    reps.append(evaluator.at(successor))
        with PerformanceMonitor.timer("controller.approx.opt") as opt_time:
            q = bellman_values(env, x, reps)
        code = int(np.argmin(q))
        record.codes = [code]
        record.value = float(q[code])
        record.fit_ms, record.opt_ms = fit_time["ms"], opt_time["ms"]
        result.replans.append(record)
        x = _apply(env, traj, x, code)
        result.step_replan.append(t)

    logger.info(f"Méthode approchée: {len(traj)} pas, récompense cumulée {traj.cumulative_reward:.0f}")
    return result


def expected_replans(steps, prefix):
    return math.ceil(steps / prefix)


def _episode(env, method, seed, x0, settings):
    if method == "exact":
        return run_exact(
            env, x0,
            order=settings.get("order", fs.DEFAULT_ORDER),
            opt_cfg=settings.get("opt_cfg"),
            prefix=settings.get("prefix", 10),
            episode_cap=settings.get("episode_cap", CARTPOLE_CONSTANTS["episode_cap"]),
            horizon=settings.get("horizon"),
            seed=seed,
        )
    return run_approx(
        env, x0,
        degree=settings.get("degree", 2),
        n_samples=settings.get("n_samples", 200),
        seed=seed,
        episode_cap=settings.get("episode_cap", CARTPOLE_CONSTANTS["episode_cap"]),
        horizon=settings.get("horizon"),
        use_transform=settings.get("use_transform", False),
    )


def initial_state(env, seed, x0=None):
    """x0 if given, else the environment reset distribution (or state 0)."""
    if x0 is not None:
        return env.as_state(x0)
    if hasattr(env, "sample_initial_state"):
        return env.sample_initial_state(np.random.default_rng(seed))
    return env.as_state(0)


def run_episodes(env, method, seeds, settings=None, x0=None):
    """One episode per seed, in parallel (SCORELIFE_THREADS workers)."""
    settings = settings or {}
    return Parallel(n_jobs=worker_count())(
        delayed(_episode)(env, method, seed, initial_state(env, seed, x0), settings) for seed in seeds
    )


def compare_methods(env, seeds, settings=None, x0=None, methods=("exact", "approx")):
    """
    Run both methods on the same seeds / initial states.

    Returns:
        (step table with FRAME_COLUMNS, per-episode summary)
    """
    settings = settings or {}
    jobs = [(method, seed) for seed in seeds for method in methods]
    episodes = Parallel(n_jobs=worker_count())(
        delayed(_episode)(env, method, seed, initial_state(env, seed, x0), settings) for method, seed in jobs
    )
    frame = pd.concat([e.to_frame() for e in episodes], ignore_index=True) if episodes else pd.DataFrame(columns=FRAME_COLUMNS)
    summary = pd.DataFrame([e.summary() for e in episodes])
    return frame, summary


def sweep_exact(seeds, gammas=(0.5, 0.8), costs=("quadratic", "reward"), settings=None):
    """Exact method on every (gamma, cost) cartpole configuration."""
    rows = []
    for gamma in gammas:
        for cost in costs:
            env = make_env("cartpole", gamma, cost)
            for episode in run_episodes(env, "exact", seeds, settings):
                rows.append({"gamma": gamma, "cost": cost, **episode.summary()})
    return pd.DataFrame(rows)
