import math

import numpy as np
import pytest

from jsqlab.errors import ConfigError
from jsqlab.fluid_model import ModelParams, fluid_smoothing
from jsqlab.grid import GridSpec
from jsqlab.lyapunov_drift import (
    apply_GY,
    drift_constants,
    lyapunov_jet,
    lyapunov_value,
    scan_drift,
    verify_drift,
)
from jsqlab.special_fn import smooth_indicator
from jsqlab.stein_solutions import FieldJet, f_h_jet

P = ModelParams(100, 1.0)


def c_specialized(beta, eps, alpha):
    return 1 - 12 / eps**2 - (1 + 4 * (1 + beta / eps)) / (beta * eps) - alpha * (4 / eps + 1 / beta) ** 2


def test_constants_reference_values():
    k = drift_constants(1.0, 11.0, 21.0, 0.1)
    assert k.c == pytest.approx(0.2137, abs=5e-5)
    assert k.d == pytest.approx(3.108, abs=5e-4)
    assert k.c_positive
    # Re-derive by direct arithmetic.
    lr = math.log(20 / 10)
    c = 1 - 12 / 100 * lr - (1 + 11 / 10 * 40 / 10) / 10 - 0.1 * (0.4 * lr + 1) ** 2
    assert k.c == pytest.approx(c, rel=1e-15)
    assert k.d == pytest.approx((2 * 21 / 11) ** 0.1 * math.exp(1.0), rel=1e-15)


def test_specialized_rate_is_more_conservative():
    for beta in (0.5, 1.0, 2.0):
        for eps in (0.5, 2.0, 10.0):
            for alpha in (0.01, 0.1, 1.0):
                general = drift_constants(beta, beta + eps, beta + 2 * eps, alpha).c
                assert c_specialized(beta, eps, alpha) <= general + 1e-12


def test_rate_decreasing_in_alpha():
    cs = [drift_constants(1.0, 3.0, 6.0, a).c for a in np.linspace(0.0, 2.0, 21)]
    assert all(b < a for a, b in zip(cs, cs[1:]))


def test_constants_validation():
    with pytest.raises(ConfigError) as err:
        drift_constants(1.0, 0.5, 2.0, 0.1)
    assert err.value.code == "PARAM_ORDER"
    with pytest.raises(ConfigError):
        drift_constants(1.0, 2.0, 3.0, -0.1)


def test_lyapunov_value_examples():
    assert lyapunov_value(P, 11.0, 21.0, 0.1, (0.0, 0.0)) == 1.0
    d = drift_constants(1.0, 11.0, 21.0, 0.1).d
    for y1 in np.linspace(-21, 0, 8):
        for y2 in np.linspace(0, 21, 8):
            v = lyapunov_value(P, 11.0, 21.0, 0.1, (y1, y2))
            assert 1.0 <= v <= d


def test_apply_GY_examples():
    y = (-1.3, 0.8)
    assert apply_GY(FieldJet(y[1], 0.0, 1.0, 0.0, 0.0), 1.0, y) == pytest.approx(-y[1])
    jet = FieldJet(y[0] ** 2, 2 * y[0], 0.0, 2.0, 0.0)
    assert apply_GY(jet, 1.0, y) == pytest.approx((-y[0] + y[1] - 1.0) * 2 * y[0] + 2)


def test_exponential_of_waiting_solution_chain_rule():
    alpha = 0.3
    rng = np.random.default_rng(0)
    for _ in range(50):
        y = (-float(rng.uniform(0, 30)), float(rng.uniform(0, 30)))
        x = (y[0] / 10, y[1] / 10)
        j = f_h_jet(P, 2.0, x)
        g = math.exp(alpha * j.f)
        g1, g2 = alpha * j.f1 / 10 * g, alpha * j.f2 / 10 * g
        g11 = g * (alpha * j.f11 / 100 + (alpha * j.f1 / 10) ** 2)
        lhs = apply_GY(FieldJet(g, g1, g2, g11, 0.0), 1.0, y)
        h = max(x[1] - 0.2, 0.0)
        rhs = -h * alpha * g + (alpha * j.f11 + alpha**2 * j.f1**2) * g / 100
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-8)


def test_lyapunov_jet_finite_differences():
    y = (-15.0, 7.0)
    jet = lyapunov_jet(P, 11.0, 21.0, 0.1, y)
    h = 1e-4
    v = lambda a, b: lyapunov_value(P, 11.0, 21.0, 0.1, (a, b))  # noqa: E731
    assert jet.f1 == pytest.approx((v(y[0] + h, y[1]) - v(y[0] - h, y[1])) / (2 * h), rel=1e-6)
    assert jet.f2 == pytest.approx((v(y[0], y[1] + h) - v(y[0], y[1] - h)) / (2 * h), rel=1e-6)


def test_verify_drift_coarse_grid():
    rep = verify_drift(P, 11.0, 21.0, 0.1, GridSpec.parse("-40:0:25,0:40:25", "diffusion"))
    assert rep.passed
    assert rep.max_chain_rule_residual <= 1e-9
    assert rep.max_boundary_residual <= 1e-8


def test_far_region_indicator_sum():
    spec = fluid_smoothing(P, 11.0, 21.0)
    for y1 in (-21.0, -30.0, -40.0):
        for y2 in (0.0, 5.0, 30.0):
            assert -smooth_indicator(spec, -y1 / 10) - smooth_indicator(spec, y2 / 10) <= -1.0


def test_zero_alpha_is_trivial():
    rep = verify_drift(P, 11.0, 21.0, 0.0, GridSpec.parse("-40:0:5,0:40:5", "diffusion"))
    assert rep.max_excess == 0.0 and rep.passed


def test_growth_proxy_is_reported_not_assumed():
    origin = lyapunov_value(P, 11.0, 21.0, 0.1, (0.0, 0.0))
    assert lyapunov_value(P, 11.0, 21.0, 0.1, (0.0, 40.0)) > 10 * origin
    # Along y1 the exponent grows only logarithmically, so the same proxy fails at -40
    # (see the decisions ledger).
    assert lyapunov_value(P, 11.0, 21.0, 0.1, (-40.0, 0.0)) < 10 * origin
    assert lyapunov_value(P, 11.0, 21.0, 0.1, (-4000.0, 0.0)) > lyapunov_value(P, 11.0, 21.0, 0.1, (-40.0, 0.0))


def test_scan_skips_invalid_pairs():
    rows = scan_drift(P, [0.05, 0.1], [(0.5, 2.0), (11.0, 21.0)], GridSpec.parse("-40:0:4,0:40:4", "diffusion"))
    assert [(r.kappa1, r.alpha) for r in rows] == [(11.0, 0.05), (11.0, 0.1)]
