"""
Property suite behind `scorelife verify`.

Each check returns a VerificationEntry (name, passed, measured, bound); the
suite collects them into a machine-readable report.
"""

import logging

import numpy as np

from back_end.classe import faber_schauder as fs
from back_end.classe.env_core import CartpoleEnv, cycle_mdp, rollout, two_state_fixture
from back_end.classe.life_codec import LifeValue, compose, digits_to_values, encode, sample_digits, shift
from back_end.classe.plotting import total_variation
from back_end.classe.policy_life import build_system, solve, verify_against_rollout
from back_end.classe.poly_approx import PolyRep, fit_poly, poly_min
from back_end.classe.rollout import (
    TabularScore,
    TruncatedEvaluator,
    brute_force_min,
    run_tabular,
    sample_score_curve,
    tail_bound,
)
from back_end.classe.transform import TransformParams, apply_transform, fit_params, params_from_trajectory
from back_end.utils.monitoring import PerformanceMonitor
from modeles.exports import VerificationEntry, VerificationReport

logger = logging.getLogger(__name__)

TILTED_STATE = (-0.0039, -0.3902, 0.0058, 0.5853)


def _entry(name, passed, measured=None, bound=None, **details):
    return VerificationEntry(
        name=name,
        passed=bool(passed),
        measured=None if measured is None else float(measured),
        bound=None if bound is None else float(bound),
        details=details,
    )


def _cartpole_box(rng, count, env):
    c = env.constants
    high = np.array([c["x_threshold"], c["xdot_bound"], c["theta_threshold"], c["thetadot_bound"]])
    return rng.uniform(-high, high, size=(count, 4))


def check_life_bounds(rng, count=100_000, round_trips=1000):
    """Random digit strings project into [0,1); encode/shift/compose round trips are exact."""
    worst = 0.0
    failures = 0
    for M in (2, 4, 8):
        digits = sample_digits(rng, M, 20, count)
        values = digits_to_values(digits, M)
        worst = max(worst, float(values.max()))
        failures += int(np.count_nonzero((values < 0.0) | (values >= 1.0)))
        for row in digits[:round_trips]:
            life = encode(list(row), M)
            head, tail = shift(life)
            if compose(head, tail) != life or head.index != row[0]:
                failures += 1
    return _entry("life_value_bounds", failures == 0, worst, 1.0, failures=failures)


def _rounding_allowance(env):
    """Float round-off of a discounted sum bounded by G_max / (1 - gamma)."""
    return 64 * np.finfo(float).eps * env.g_max / (1.0 - env.gamma)


def check_recursion_cycle(rng, pairs=1000, n=60):
    env = cycle_mdp(3, gamma=0.5)
    evaluator = TruncatedEvaluator(env, horizon=n)
    lives = [LifeValue(tuple(row), 2) for row in sample_digits(rng, 2, n + 1, pairs)]
    states = rng.integers(0, 3, size=pairs)
    measured = float(np.max(evaluator.theorem1_residuals(lives, states)))
    bound = 2 * tail_bound(env.gamma, env.g_max, n - 1) + _rounding_allowance(env)
    return _entry("recursion_residual_cycle", measured < 1e-12 and measured <= bound, measured, bound)


def check_recursion_cartpole(rng, pairs=1000, n=80):
    env = CartpoleEnv(gamma=0.8, cost_kind="quadratic")
    evaluator = TruncatedEvaluator(env, horizon=n)
    lives = [LifeValue(tuple(row), 2) for row in sample_digits(rng, 2, n + 1, pairs)]
    states = _cartpole_box(rng, pairs, env)
    measured = float(np.max(evaluator.theorem1_residuals(lives, states)))
    bound = 2 * tail_bound(env.gamma, env.g_max, n - 1) + _rounding_allowance(env)
    return _entry("recursion_residual_cartpole", measured < 1e-6 and measured <= bound, measured, bound)


def check_prefix_round_trip(rng, samples=50, n=60):
    env = cycle_mdp(3, gamma=0.5)
    evaluator = TruncatedEvaluator(env, horizon=n)
    traj = rollout(env, 0, [0, 0])
    params = params_from_trajectory(traj, env.gamma, env.M)
    l = rng.uniform(0.0, 1.0, samples)
    transformed = apply_transform(evaluator, params, l, x0=0)
    direct = evaluator.eval_values(l, traj.final_state)
    measured = float(np.max(np.abs(transformed - direct)))
    return _entry("prefix_round_trip_cycle", measured < 1e-9, measured, 1e-9, final_state=int(traj.final_state))


def check_transform_recovery(seed=0):
    """Plant (phi, psi, N) on a quadratic base and recover it."""
    base = PolyRep(np.array([1.0, -2.0, 3.0]), 2)
    planted = TransformParams(0.3, 0.5, 2, 0.5, 2)

    class Synthesized:
        def score(self, l):
            return apply_transform(base, planted, l)

    fitted = fit_params(base, Synthesized(), n_samples=32, seed=seed, gamma=0.5, M=2, g_max=1.0)
    c = fitted.continuous
    error = max(abs(c.psi - planted.psi), abs(c.phi_value - planted.phi_value))
    passed = error < 1e-6 and abs(c.N - planted.N) < 1e-3
    return _entry("transform_fit_recovery", passed, error, 1e-6, N=c.N, residual=fitted.continuous_residual)


def check_policy_life(rng, policies=20, n=40):
    fixture = two_state_fixture()
    system = build_system(fixture, [1, 0])
    values = solve(system)
    fixture_error = float(np.max(np.abs(values - np.array([2 / 3, 1 / 3]))))

    env = cycle_mdp(8, gamma=0.5)
    worst = 0.0
    for _ in range(policies):
        system = build_system(env, rng.integers(0, 2, size=8))
        solve(system)
        worst = max(worst, verify_against_rollout(system, env, n))
    bound = 2.0 ** -n + 1e-12
    return _entry(
        "policy_life_values", fixture_error <= 1e-12 and worst <= bound, worst, bound, fixture_error=fixture_error
    )


def check_tabular_oracle(depth=10):
    env = cycle_mdp(3, gamma=0.5)
    run = run_tabular(TabularScore.build(env, depth))
    bound = tail_bound(env.gamma, env.g_max, depth - 1)
    gap = 0.0
    for x in env.states:
        table_min = float(run.tabular.table[x].min())
        _, oracle_min, _ = brute_force_min(env, x, depth)
        gap = max(gap, abs(table_min - oracle_min))
    deltas = run.deltas
    ratios_ok = all(b <= env.gamma * a + 1e-12 for a, b in zip(deltas, deltas[1:]))
    return _entry(
        "tabular_oracle_equivalence", gap <= bound and ratios_ok, gap, bound,
        sweeps=len(deltas), stop_reason=run.stop_reason,
    )


def check_fs_interpolation(max_order=10):
    worst = 0.0
    cases = [
        (TruncatedEvaluator(cycle_mdp(3, gamma=0.5)), 0),
        (TruncatedEvaluator(CartpoleEnv(gamma=0.5)), np.zeros(4)),
    ]
    for evaluator, x in cases:
        rep = fs.fit(evaluator, x, max_order)
        points = np.arange(2 ** max_order + 1) / 2 ** max_order
        samples = evaluator.at(x).score(points)
        worst = max(worst, float(np.max(np.abs(fs.reconstruct(rep, points) - samples))))
    return _entry("faber_schauder_interpolation", worst <= 1e-12, worst, 1e-12, order=max_order)


def check_poly_min_closeness(gamma=0.8, degree=5, seed=0, depth=10):
    env = CartpoleEnv(gamma=gamma, cost_kind="quadratic")
    evaluator = TruncatedEvaluator(env)
    rep = fit_poly(evaluator, np.array(TILTED_STATE), degree, 200, seed)
    _, poly_value = poly_min(rep)
    grid = sample_score_curve(evaluator, np.array(TILTED_STATE), mode="dyadic", depth=depth)
    spread = float(grid["S"].max() - grid["S"].min())
    gap = abs(poly_value - float(grid["S"].min()))
    return _entry("polynomial_minimum_closeness", gap <= 0.05 * spread, gap, 0.05 * spread)


def check_oscillation_growth(gammas=(0.5, 0.6, 0.7, 0.8), depth=12):
    variations = []
    for gamma in gammas:
        evaluator = TruncatedEvaluator(CartpoleEnv(gamma=gamma, cost_kind="quadratic"))
        curve = sample_score_curve(evaluator, np.zeros(4), mode="dyadic", depth=depth)
        variations.append(total_variation(curve["S"].to_numpy()))
    increasing = all(b > a for a, b in zip(variations, variations[1:]))
    return _entry(
        "oscillation_grows_with_gamma", increasing, variations[-1], None,
        gammas=list(gammas), total_variation=variations,
    )


@PerformanceMonitor.time_function
def run_verification(seed=0, qualitative=False):
    """
    Run every property check.

    Returns:
        VerificationReport (success = all entries passed); a check that raises
        is recorded as failed with the error message
    """
    rng = np.random.default_rng(seed)
    checks = [
        ("life_value_bounds", lambda: check_life_bounds(rng)),
        ("recursion_residual_cycle", lambda: check_recursion_cycle(rng)),
        ("recursion_residual_cartpole", lambda: check_recursion_cartpole(rng)),
        ("prefix_round_trip_cycle", lambda: check_prefix_round_trip(rng)),
        ("transform_fit_recovery", lambda: check_transform_recovery(seed)),
        ("policy_life_values", lambda: check_policy_life(rng)),
        ("tabular_oracle_equivalence", check_tabular_oracle),
        ("faber_schauder_interpolation", check_fs_interpolation),
    ]
    if qualitative:
        checks += [
            ("polynomial_minimum_closeness", lambda: check_poly_min_closeness(seed=seed)),
            ("oscillation_grows_with_gamma", check_oscillation_growth),
        ]

    entries = []
    for name, check in checks:
        try:
            entry = check()
        except Exception as e:
            logger.error(f"Vérification {name} interrompue: {e}")
            entry = _entry(name, False, error=str(e))
        status = "OK" if entry.passed else "ÉCHEC"
        logger.info(f"[{status}] {entry.name}: mesuré={entry.measured}, borne={entry.bound}")
        entries.append(entry)
    return VerificationReport(success=all(e.passed for e in entries), entries=entries)
