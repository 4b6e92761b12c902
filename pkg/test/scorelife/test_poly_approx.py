import numpy as np
from numpy.polynomial import polynomial as P
import pytest

from back_end.classe.poly_approx import (
    L_UPPER,
    PolyRep,
    bellman_action,
    bellman_values,
    fit_poly,
    poly_min,
    rep_min_value,
    transform_poly,
)
from back_end.classe.transform import TransformParams, apply_transform
from back_end.utils.exceptions import FitError

BASE = PolyRep(np.array([1.0, -2.0, 3.0]), 2)


def test_fit_recovers_an_exact_quadratic():
    rep = fit_poly(BASE, degree=2, n_samples=50, seed=4)
    np.testing.assert_allclose(rep.coeffs, BASE.coeffs, atol=1e-10)
    assert rep.rms < 1e-12
    assert rep.n_samples == 50
    assert np.isfinite(rep.condition)


def test_too_few_samples():
    with pytest.raises(FitError) as info:
        fit_poly(BASE, degree=3, n_samples=3)
    assert info.value.details == {"n_samples": 3, "degree": 3}


def test_fit_is_seeded(cycle3_evaluator):
    first = fit_poly(cycle3_evaluator, 0, 2, 100, seed=7)
    second = fit_poly(cycle3_evaluator, 0, 2, 100, seed=7)
    np.testing.assert_array_equal(first.coeffs, second.coeffs)
    assert first.state == (0.0,)


def test_closed_form_minimum():
    bowl = PolyRep(np.array([0.09, -0.6, 1.0]), 2)
    l, value = poly_min(bowl)
    assert l == pytest.approx(0.3)
    assert value == pytest.approx(0.0, abs=1e-15)


def test_minimum_on_the_edges():
    assert poly_min(PolyRep(np.array([0.0, 1.0]), 1)) == (0.0, 0.0)
    l, value = poly_min(PolyRep(np.array([0.0, -1.0]), 1))
    assert l == L_UPPER
    assert value == pytest.approx(-1.0)


def test_high_degree_minimum_uses_a_grid():
    coeffs = np.zeros(7)
    coeffs[:3] = [0.0625, -0.5, 1.0]
    l, value = poly_min(PolyRep(coeffs, 6))
    assert l == pytest.approx(0.25, abs=1e-6)
    assert value == pytest.approx(0.0, abs=1e-10)


def test_rep_min_value_for_rollouts(cycle3_evaluator):
    assert rep_min_value(cycle3_evaluator.at(0)) == pytest.approx(2 / 3, abs=2.0 ** -10 * 4)


@pytest.mark.parametrize("x,expected", [(0, 0), (1, 1), (2, 0)])
def test_bellman_action_with_rollout_minima(cycle3, cycle3_evaluator, x, expected):
    q = bellman_values(cycle3, x, cycle3_evaluator.at)
    assert q.shape == (2,)
    assert bellman_action(cycle3, x, cycle3_evaluator.at).index == expected


@pytest.mark.parametrize("x,expected", [(0, 0), (1, 1), (2, 0)])
def test_bellman_action_with_quadratic_fits(cycle3, cycle3_evaluator, x, expected):
    reps = [fit_poly(cycle3_evaluator, cycle3.step(x, a), 2, 200, seed=0) for a in range(2)]
    assert bellman_action(cycle3, x, reps).index == expected


def test_bellman_ties_go_to_the_lowest_code(two_state):
    flat = PolyRep(np.array([1.0]), 0)
    q = bellman_values(two_state, 1, [flat, flat])
    assert q[0] == q[1]
    assert bellman_action(two_state, 1, [flat, flat]).index == 0


def test_transform_poly_is_exact():
    params = TransformParams(0.3, 0.5, 2, 0.5, 2)
    image = transform_poly(BASE, params, 0.5)
    assert image.degree == 2
    l = np.array([0.0, 0.2, 0.55, 0.9])
    np.testing.assert_allclose(image.score(l), apply_transform(BASE, params, l), atol=1e-12)


def test_json_round_trip():
    restored = PolyRep.from_json(fit_poly(BASE, degree=2, n_samples=20).to_json())
    np.testing.assert_allclose(restored.coeffs, BASE.coeffs, atol=1e-10)
    assert restored.degree == 2


def test_json_keeps_the_action_base():
    rep = PolyRep(np.array([0.5, 1.0]), 1, M=4)
    data = rep.to_json()
    assert data["M"] == 4
    assert PolyRep.from_json(data).M == 4
    legacy = {k: v for k, v in data.items() if k != "M"}
    assert PolyRep.from_json(legacy).M == 2


def test_fit_is_a_local_least_squares_optimum(cycle3_evaluator):
    rep = fit_poly(cycle3_evaluator, 0, 3, 100, seed=2)
    l = np.random.default_rng(2).uniform(0.0, 1.0, 100)
    y = cycle3_evaluator.at(0).score(l)
    design = P.polyvander(l, 3)

    def rms(coeffs):
        return float(np.sqrt(np.mean((design @ coeffs - y) ** 2)))

    assert rms(rep.coeffs) == pytest.approx(rep.rms, rel=1e-12)
    for axis in range(4):
        for sign in (1.0, -1.0):
            nudged = rep.coeffs.copy()
            nudged[axis] += sign * 1e-6
            assert rms(rep.coeffs) <= rms(nudged)


@pytest.mark.parametrize("degree", [2, 3, 5])
def test_poly_min_dominates_random_points(cycle3_evaluator, rng, degree):
    rep = fit_poly(cycle3_evaluator, 1, degree, 200, seed=degree)
    _, value = poly_min(rep)
    assert value <= float(np.min(rep.score(rng.uniform(0.0, L_UPPER, 10_000)))) + 1e-12
    grid = np.linspace(0.0, L_UPPER, 1_000_000)
    assert value == pytest.approx(float(np.min(rep.score(grid))), abs=1e-8)
