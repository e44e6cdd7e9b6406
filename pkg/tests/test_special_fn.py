import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import lambertw

from jsqlab.errors import DomainError
from jsqlab.special_fn import (
    INV_E,
    SmoothingSpec,
    lambert_w0,
    lambert_w0_deriv,
    lambert_wm1,
    smooth_indicator,
    smooth_indicator_array,
)

E = math.e


@pytest.mark.parametrize(
    "x, expected",
    [(0.0, 0.0), (-INV_E, -1.0), (E, 1.0), (2 * E * E, 2.0)],
)
def test_w0_known_values(x, expected):
    assert lambert_w0(x) == pytest.approx(expected, abs=1e-13)


@pytest.mark.parametrize("x, expected", [(-INV_E, -1.0), (-2 * math.exp(-2), -2.0)])
def test_wm1_known_values(x, expected):
    assert lambert_wm1(x) == pytest.approx(expected, abs=1e-12)


def test_wm1_against_bisection():
    lo, hi = -10.0, -1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid * math.exp(mid) < -0.1:
            hi = mid
        else:
            lo = mid
    assert lambert_wm1(-0.1) == pytest.approx(0.5 * (lo + hi), rel=1e-13)
    assert lambert_wm1(-0.1) == pytest.approx(-3.5772, abs=1e-4)


def test_domain_errors():
    with pytest.raises(DomainError):
        lambert_w0(-INV_E - 1e-10)
    with pytest.raises(DomainError):
        lambert_wm1(0.0)
    with pytest.raises(DomainError):
        lambert_wm1(0.5)
    with pytest.raises(DomainError):
        lambert_w0_deriv(-INV_E)


def test_guard_band_snaps_to_branch_point():
    assert lambert_w0(-INV_E - 5e-16) == -1.0
    assert lambert_wm1(-INV_E - 5e-16) == -1.0


def test_round_trip_dense():
    xs = np.concatenate([-INV_E + np.geomspace(1e-12, 1.0, 5000), np.geomspace(1e-300, 1e8, 5000)])
    err = max(abs(lambert_w0(x) * math.exp(lambert_w0(x)) - x) / abs(x) for x in xs)
    assert err <= 1e-12


def test_against_scipy_both_branches():
    # W is ill-conditioned at the branch point (W' ~ 1/sqrt(x + 1/e)), so compare a little away from it.
    for x in np.concatenate([-INV_E + np.geomspace(1e-4, 0.3, 200), np.geomspace(1e-6, 1e6, 200)]):
        assert lambert_w0(x) == pytest.approx(lambertw(x, 0).real, rel=1e-12, abs=1e-14)
    for x in -np.geomspace(1e-200, INV_E - 1e-4, 300):
        assert lambert_wm1(x) == pytest.approx(lambertw(x, -1).real, rel=1e-12)


@given(st.floats(min_value=-INV_E + 1e-14, max_value=-1e-300))
def test_branch_order(x):
    assert lambert_wm1(x) <= -1.0 <= lambert_w0(x)


@given(st.floats(min_value=-1.0, max_value=30.0))
def test_inverse_identity(w):
    assert lambert_w0(w * math.exp(w)) == pytest.approx(w, rel=1e-9, abs=1e-9)


def test_w0_strictly_increasing():
    xs = np.linspace(-INV_E, 50.0, 4001)
    ws = [lambert_w0(x) for x in xs]
    assert all(b > a for a, b in zip(ws, ws[1:]))


def test_derivative():
    assert lambert_w0_deriv(E) == pytest.approx(1 / (2 * E), rel=1e-14)
    assert lambert_w0_deriv(0.0) == 1.0
    h = 1e-6
    assert (lambert_w0(h) - lambert_w0(-h)) / (2 * h) == pytest.approx(1.0, rel=1e-6)


# With h = 1e-6 the difference quotient loses ~eps*W/h to rounding, so x stays moderate here.
@settings(max_examples=200)
@given(st.one_of(st.floats(min_value=-0.36, max_value=-1e-3), st.floats(min_value=1e-3, max_value=20.0)))
def test_derivative_matches_finite_difference(x):
    h = 1e-6
    fd = (lambert_w0(x + h) - lambert_w0(x - h)) / (2 * h)
    assert lambert_w0_deriv(x) == pytest.approx(fd, rel=1e-6)
    assert lambert_w0_deriv(x) > 0


SPEC = SmoothingSpec(1.0, 3.0)


def test_smooth_indicator_examples():
    assert smooth_indicator(SPEC, 0.5) == 0.0
    assert smooth_indicator(SPEC, 4.0) == 1.0
    assert smooth_indicator(SPEC, 2.0) == pytest.approx(0.5, abs=1e-15)


def test_spec_rejects_bad_order():
    with pytest.raises(ValueError):
        SmoothingSpec(2.0, 2.0)


def test_phi_shape_and_bounds():
    xs = np.linspace(-1.0, 5.0, 60001)
    vals = smooth_indicator_array(SPEC, xs)
    d1 = smooth_indicator_array(SPEC, xs, 1)
    d2 = smooth_indicator_array(SPEC, xs, 2)
    assert np.all(np.diff(vals) >= 0) and vals.min() >= 0 and vals.max() <= 1
    width = SPEC.upper - SPEC.lower
    assert np.abs(d1).max() <= 4 / width + 1e-15
    assert np.abs(d2).max() <= 12 / width**2 + 1e-15


def test_array_matches_scalar():
    xs = np.linspace(0.0, 4.0, 401)
    for order in (0, 1, 2):
        arr = smooth_indicator_array(SPEC, xs, order)
        assert np.array_equal(arr, [smooth_indicator(SPEC, x, order) for x in xs])


@pytest.mark.parametrize("knot", [1.0, 2.0, 3.0])
def test_phi_continuity_at_knots(knot):
    eps = 1e-13
    for order in (0, 1):
        left = smooth_indicator(SPEC, knot - eps, order)
        right = smooth_indicator(SPEC, knot + eps, order)
        assert abs(left - right) <= 1e-12


def test_second_derivative_right_limit_at_knots():
    for knot in SPEC.knots:
        assert smooth_indicator(SPEC, knot, 2) == pytest.approx(smooth_indicator(SPEC, knot + 1e-12, 2), abs=1e-9)


def test_derivative_large_x_against_scipy():
    for x in np.geomspace(20.0, 1e8, 50):
        w = lambertw(x).real
        assert lambert_w0_deriv(x) == pytest.approx(w / (x * (1 + w)), rel=1e-12)


@given(st.floats(min_value=-1.0, max_value=5.0))
def test_phi_prime_finite_difference(x):
    h = 1e-6
    if min(abs(x - k) for k in SPEC.knots) < 1e-4:
        return  # the difference quotient straddles a jump of phi''
    fd = (smooth_indicator(SPEC, x + h) - smooth_indicator(SPEC, x - h)) / (2 * h)
    assert smooth_indicator(SPEC, x, 1) == pytest.approx(fd, abs=1e-7)
