import numpy as np
import pytest

from back_end.classe.env_core import rollout
from back_end.classe.life_codec import LifeValue
from back_end.classe.poly_approx import PolyRep
from back_end.classe.transform import (
    TransformParams,
    apply_transform,
    compose_params,
    fit_params,
    params_from_trajectory,
)
from back_end.utils.exceptions import ConfigError, DomainError

BASE = PolyRep(np.array([1.0, -2.0, 3.0]), 2)


class Planted:
    def __init__(self, params):
        self.params = params

    def score(self, l):
        return apply_transform(BASE, self.params, l)


def test_params_from_trajectory(cycle3):
    params = params_from_trajectory(rollout(cycle3, 0, [0, 0]), 0.5)
    assert params.phi.digits == (0, 0)
    assert params.phi_value == 0.0
    assert params.psi == 0.5
    assert params.N == 2
    assert params.integral


def test_identity_params_leave_the_function_unchanged(cycle3_evaluator):
    params = TransformParams.identity(0.5)
    l = np.array([0.1, 0.6])
    np.testing.assert_allclose(apply_transform(cycle3_evaluator, params, l, x0=1), cycle3_evaluator.eval_values(l, 1))


def test_round_trip_through_a_prefix(cycle3, cycle3_evaluator, rng):
    traj = rollout(cycle3, 0, [0, 1, 1])
    params = params_from_trajectory(traj, cycle3.gamma)
    l = rng.uniform(0.0, 1.0, 50)
    transformed = apply_transform(cycle3_evaluator, params, l, x0=0)
    direct = cycle3_evaluator.eval_values(l, traj.final_state)
    np.testing.assert_allclose(transformed, direct, atol=1e-9)


def test_digit_exact_path_for_life_values(cycle3, cycle3_evaluator, rng):
    traj = rollout(cycle3, 1, [1, 0])
    params = params_from_trajectory(traj, cycle3.gamma)
    life = LifeValue(tuple(rng.integers(0, 2, size=61)), 2)
    transformed = apply_transform(cycle3_evaluator, params, life, x0=1)
    assert transformed == pytest.approx(cycle3_evaluator.eval(life, traj.final_state), abs=1e-9)


def test_domain_error_past_one():
    params = TransformParams(0.9, 0.0, 1, 0.5, 2)
    with pytest.raises(DomainError):
        apply_transform(BASE, params, np.array([0.5]))
    with pytest.raises(DomainError):
        apply_transform(BASE, TransformParams.identity(0.5), np.array([1.0]))


def test_compose_matches_the_joined_prefix(cycle3):
    first = params_from_trajectory(rollout(cycle3, 0, [0]), 0.5)
    second = params_from_trajectory(rollout(cycle3, 1, [1]), 0.5)
    joined = params_from_trajectory(rollout(cycle3, 0, [0, 1]), 0.5)
    composed = compose_params(first, second)
    assert composed.phi == joined.phi
    assert composed.psi == pytest.approx(joined.psi)
    assert composed.N == joined.N


def test_compose_rejects_mismatched_discounts():
    with pytest.raises(ConfigError):
        compose_params(TransformParams.identity(0.5), TransformParams.identity(0.8))


def test_fit_recovers_planted_parameters():
    planted = TransformParams(0.3, 0.5, 2, 0.5, 2)
    fitted = fit_params(BASE, Planted(planted), n_samples=32, seed=0, gamma=0.5, M=2, g_max=1.0)
    assert abs(fitted.continuous.N - 2) < 1e-3
    assert fitted.params.N == 2
    assert fitted.params.phi_value == pytest.approx(0.3, abs=1e-6)
    assert fitted.params.psi == pytest.approx(0.5, abs=1e-6)
    assert fitted.reliable


def test_fit_finds_the_one_step_prefix(cycle3_evaluator):
    # a0 leads from state 0 to state 1 at zero cost
    fitted = fit_params(cycle3_evaluator, cycle3_evaluator, n_samples=32, seed=0, x0=0, xN=1)
    assert fitted.params.N == 1
    assert fitted.params.phi_value == pytest.approx(0.0, abs=1e-9)
    assert fitted.params.psi == pytest.approx(0.0, abs=1e-9)
    assert fitted.reliable
    assert fitted.snapped
    assert fitted.snapped_residual <= fitted.continuous_residual + 1e-12
    data = fitted.to_json()
    assert data["N_snapped"] == 1
    assert data["phi_digits"] == {"M": 2, "digits": [0]}


def test_fit_needs_a_discount():
    with pytest.raises(ConfigError):
        fit_params(BASE, BASE)
    with pytest.raises(ConfigError):
        fit_params(BASE, BASE, n_samples=2, gamma=0.5)
