import numpy as np
import pytest

from back_end.classe import faber_schauder as fs
from back_end.classe.fractal_opt import L_UPPER, StopReason, gradient_descent, grid_scan, multistart_min
from back_end.classe.poly_approx import PolyRep
from back_end.utils.exceptions import ConfigError
from modeles.experiment import OptimizerConfig

# (l - 0.3)^2
BOWL = PolyRep(np.array([0.09, -0.6, 1.0]), 2)


class ScoreOnly:
    def score(self, l):
        return np.zeros_like(np.asarray(l, dtype=float))


def test_descent_converges_on_a_bowl():
    cfg = OptimizerConfig(eta=0.1, delta=1e-8)
    result = gradient_descent(BOWL, cfg, l0=0.9)
    assert result.stop_reason is StopReason.GRADIENT_SMALL
    assert result.l == pytest.approx(0.3, abs=1e-4)
    assert result.start == 0.9


def test_small_delta_tightens_the_stop():
    loose = gradient_descent(BOWL, OptimizerConfig(eta=0.1, delta=1e-2), l0=0.9)
    tight = gradient_descent(BOWL, OptimizerConfig(eta=0.1, delta=1e-4), l0=0.9)
    assert abs(tight.l - 0.3) < abs(loose.l - 0.3)
    assert tight.iterations > loose.iterations


def test_sign_flip_applies_the_update_then_stops():
    result = gradient_descent(BOWL, OptimizerConfig(eta=1.5, delta=1e-8), l0=0.35)
    assert result.stop_reason is StopReason.SIGN_FLIP
    assert result.iterations == 2
    assert result.l == pytest.approx(0.5)


def test_clamped_at_the_left_edge():
    line = PolyRep(np.array([0.0, 1.0]), 1)
    result = gradient_descent(line, OptimizerConfig(eta=0.5, delta=1e-8), l0=0.2)
    assert result.stop_reason is StopReason.CLAMPED
    assert result.l == 0.0


def test_clamped_below_one():
    line = PolyRep(np.array([0.0, -1.0]), 1)
    result = gradient_descent(line, OptimizerConfig(eta=0.5, delta=1e-8), l0=0.8)
    assert result.stop_reason is StopReason.CLAMPED
    assert result.l == L_UPPER
    assert result.l < 1.0


def test_iteration_cap():
    line = PolyRep(np.array([0.0, 1.0]), 1)
    result = gradient_descent(line, OptimizerConfig(eta=1e-6, delta=1e-8, max_iters=5), l0=0.5)
    assert result.stop_reason is StopReason.MAX_ITERS
    assert result.iterations == 5


def test_descent_needs_a_slope():
    with pytest.raises(ConfigError):
        gradient_descent(ScoreOnly())


def test_grid_scan_prefers_smaller_l_on_ties():
    flat = PolyRep(np.array([1.0]), 0)
    assert grid_scan(flat, 3) == (0.0, 1.0)


def test_more_restarts_never_hurt(cycle3_evaluator):
    rep = fs.fit(cycle3_evaluator, 0, 8)
    values = [
        multistart_min(rep, OptimizerConfig(grid_depth=0, max_iters=2000), restarts=r).value
        for r in (1, 2, 4, 8)
    ]
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_single_restart_without_grid_is_one_descent():
    cfg = OptimizerConfig(eta=0.1, delta=1e-8, seed=3, grid_depth=0)
    best = multistart_min(BOWL, cfg)
    assert best.restarts_used == 1
    assert len(best.runs) == 1
    assert best.grid_l is None
    assert best.l_star == best.runs[0].l


def test_multistart_finds_cycle_optimum(cycle3_evaluator):
    rep = fs.fit(cycle3_evaluator, 0, 8)
    best = multistart_min(rep, OptimizerConfig(restarts=4, grid_depth=8, max_iters=2000))
    assert 2 / 3 - 1e-9 <= best.value <= 2 / 3 + 2.0 ** -8 * 4
    assert best.value <= best.grid_value
    assert best.l_star < 0.5
    row = best.to_row()
    assert set(row) == {"l_star", "value", "stop_reason", "restarts_used"}


def test_restarts_must_be_positive():
    with pytest.raises(ConfigError):
        multistart_min(BOWL, OptimizerConfig(), restarts=0)
