import numpy as np
import pytest

from back_end.classe import faber_schauder as fs
from back_end.classe.poly_approx import PolyRep
from back_end.utils.exceptions import ConfigError, DomainError, FitError

SQUARE = PolyRep(np.array([0.0, 0.0, 1.0]), 2)


class NanAbove:
    """score(l) = l, but NaN past a cut-off."""

    def __init__(self, cut):
        self.cut = cut

    def score(self, l):
        l = np.asarray(l, dtype=float)
        return np.where(l > self.cut, np.nan, l)


def test_hat_values():
    assert fs.basis_eval(0, 0, 0.5) == 1.0
    assert fs.basis_eval(0, 0, 0.0) == 0.0
    assert fs.basis_eval(0, 0, 1.0) == 0.0
    assert fs.basis_eval(1, 1, 0.75) == 1.0
    assert fs.basis_eval(0, 1, 0.75) == 0.0
    np.testing.assert_allclose(fs.basis_eval(0, 0, np.array([0.25, 0.75])), [0.5, 0.5])


def test_hat_slopes_use_right_derivative():
    assert fs.basis_slope(0, 0, 0.25) == 2.0
    assert fs.basis_slope(0, 0, 0.75) == -2.0
    assert fs.basis_slope(0, 0, 0.5) == -2.0
    assert fs.basis_slope(1, 2, 0.3) == 8.0


def test_invalid_basis_index():
    with pytest.raises(ConfigError):
        fs.basis_eval(2, 1, 0.5)
    with pytest.raises(DomainError):
        fs.basis_eval(0, 0, 1.5)


def test_square_coefficients():
    rep = fs.fit(SQUARE, order=6)
    assert rep.alpha0 == 0.0
    assert rep.alpha1 == 1.0
    for j, level in enumerate(rep.alpha):
        np.testing.assert_allclose(level, -(4.0 ** -(j + 1)), atol=1e-15)
    assert rep.n_coefficients == 2 + 2 ** 6 - 1


def test_interpolates_dyadic_samples(cycle3_evaluator):
    order = 8
    rep = fs.fit(cycle3_evaluator, 0, order)
    points = np.arange(2 ** order + 1) / 2 ** order
    samples = cycle3_evaluator.at(0).score(points)
    assert np.max(np.abs(fs.reconstruct(rep, points) - samples)) <= 1e-12
    assert rep.state == (0.0,)


def test_order_zero_is_the_chord():
    rep = fs.fit(SQUARE, order=0)
    assert rep.alpha == ()
    assert rep.score(0.3) == pytest.approx(0.3)


def test_derivative_is_the_interpolant_slope():
    rep = fs.fit(SQUARE, order=6)
    # 0.3 lies in cell 19 of 64; chord slope (20^2 - 19^2) / 64
    assert fs.derivative(rep, 0.3) == pytest.approx(39 / 64, abs=1e-12)
    np.testing.assert_allclose(rep.slope(np.array([0.3, 0.3])), [39 / 64, 39 / 64])


def test_order_bounds():
    with pytest.raises(ConfigError):
        fs.fit(SQUARE, order=fs.MAX_ORDER + 1)
    with pytest.raises(ConfigError):
        fs.fit(SQUARE, order=-1)


def test_non_finite_sample_reports_location():
    with pytest.raises(FitError) as info:
        fs.fit(NanAbove(0.5), order=3)
    assert info.value.details["l"] == pytest.approx(0.625)


def test_json_round_trip_keeps_the_function(cycle3_evaluator):
    rep = fs.fit(cycle3_evaluator, 1, 6)
    data = rep.to_json()
    assert data["kappa"] == "identity"
    restored = fs.FSRep.from_json(data)
    l = np.linspace(0.0, 1.0, 101)
    np.testing.assert_allclose(restored.score(l), rep.score(l), atol=1e-15)
    assert restored.order == 6


def test_json_rejects_out_of_range_coefficient():
    data = fs.fit(SQUARE, order=2).to_json()
    data["alpha"].append([5, 0, 1.0])
    with pytest.raises(ConfigError):
        fs.FSRep.from_json(data)


CUBIC = PolyRep(np.array([0.0, 1.0, 0.0, 1.0]), 3)


def test_error_shrinks_with_order():
    grid = np.linspace(0.0, 1.0, 4097)
    exact = CUBIC.score(grid)
    errors = [np.max(np.abs(fs.reconstruct(fs.fit(CUBIC, order=n), grid) - exact)) for n in range(9)]
    assert all(b <= a for a, b in zip(errors, errors[1:]))
    assert errors[-1] < 1e-4


def test_derivative_matches_finite_differences(rng):
    order = 6
    rep = fs.fit(CUBIC, order=order)
    l = rng.uniform(0.0, 1.0, 500)
    cell = 2.0 ** -order
    distance = np.abs(l - np.round(l / cell) * cell)
    l = l[distance > 2.0 ** (-order - 2)]
    h = 2.0 ** (-order - 4)
    central = (fs.reconstruct(rep, l + h) - fs.reconstruct(rep, l - h)) / (2 * h)
    np.testing.assert_allclose(fs.derivative(rep, l), central, rtol=1e-6)
