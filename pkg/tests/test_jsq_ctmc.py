import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jsqlab.errors import ConfigError, DomainError, StateLimitExceeded, TruncationOverflow
from jsqlab.fluid_model import ModelParams
from jsqlab.jsq_ctmc import (
    apply_GQ,
    bar_residual,
    check_state,
    count_states,
    exact_stationary,
    expansion_gap_check,
    lift,
    moment_identities_check,
    q3_bound,
    sample_scaled_states,
    simulate,
    thm_main_check,
)
from jsqlab.stein_solutions import FhField, QuadraticField, apply_L

P10 = ModelParams(10, 1.0)


@st.composite
def states(draw, n=10, depth=4):
    q = sorted((draw(st.integers(0, n)) for _ in range(depth)), reverse=True)
    return tuple(q)


def test_check_state():
    assert check_state([3, 2, 0], 3) == (3, 2, 0)
    with pytest.raises(DomainError):
        check_state([1, 2], 3)
    with pytest.raises(DomainError):
        check_state([4, 0], 3)
    with pytest.raises(DomainError):
        check_state([1.5, 0], 3)


@settings(max_examples=100)
@given(states())
def test_generator_examples(q):
    n, lam = P10.n, P10.lam
    assert apply_GQ(P10, lambda s: 1.0, q) == 0.0
    assert apply_GQ(P10, lambda s: float(s[0]), q) == pytest.approx(n * lam * (q[0] < n) - (q[0] - q[1]))
    m = 17
    total = sum(q)
    expected = n * lam * (total < m) - q[0] * (total <= m)
    assert apply_GQ(P10, lambda s: float(min(m, sum(s))), q) == pytest.approx(expected)


def test_generator_truncation_overflow():
    with pytest.raises(TruncationOverflow):
        apply_GQ(P10, lambda s: 0.0, (10, 10, 10), trunc_b=3)
    assert apply_GQ(P10, lambda s: 0.0, (10, 10, 9), trunc_b=3) == 0.0


def test_generator_rows_sum_to_zero():
    dist = exact_stationary(ModelParams(3, 0.5), 30, depth=6)
    rows = np.asarray(dist.generator.sum(axis=1)).ravel()
    assert np.abs(rows).max() <= 1e-12


def test_generator_matrix_matches_pointwise():
    dist = exact_stationary(ModelParams(2, 0.5), 20, depth=5)
    rng = np.random.default_rng(0)
    values = {tuple(s): rng.normal() for s in dist.states.tolist()}
    f = values.__getitem__
    fvec = np.array([values[tuple(s)] for s in dist.states.tolist()])
    direct = dist.generator @ fvec
    for i, s in enumerate(dist.states.tolist()):
        assert direct[i] == pytest.approx(apply_GQ(dist.params, f, s, depth=dist.depth, cap=dist.cap), abs=1e-12)


def test_lift_and_scaled_field():
    f = lift(lambda x: x[1], 10)
    q = (10, 4, 2)
    assert f(q) == pytest.approx(0.4)
    x = ((10 - 10) / 10, 4 / 10)
    gap = apply_GQ(P10, f, q) - apply_L(P10, QuadraticField((0, 0, 0, 0, 1)).jet(x), x)
    lhs, rhs = expansion_gap_check(P10, QuadraticField((0, 0, 0, 0, 1)), q)
    assert lhs == pytest.approx(gap)
    assert rhs == pytest.approx(lhs, abs=1e-12)


def test_x2_field_with_third_level():
    # The only term left for f = x2 at an interior state is q3/n.
    q = (7, 4, 2)
    lhs, _ = expansion_gap_check(P10, QuadraticField((0, 0, 0, 0, 1)), q)
    assert lhs == pytest.approx(2 / 10)


@pytest.mark.parametrize("n", [10, 100])
def test_expansion_identity_random_states(n):
    params = ModelParams(n, 1.0)
    rng = np.random.default_rng(n)
    fields = [FhField(params, 2.0), QuadraticField(), QuadraticField((-0.4, 1.3, 0.8, -2.0, 0.6))]
    for _ in range(100):
        q1 = n if rng.random() < 0.3 else int(rng.integers(0, n + 1))
        q2 = q1 if rng.random() < 0.2 else int(rng.integers(0, q1 + 1))
        q = (q1, q2, int(rng.integers(0, q2 + 1)))
        for fld in fields:
            lhs, rhs = expansion_gap_check(params, fld, q)
            assert abs(lhs - rhs) <= 1e-9


def test_exact_n1_is_geometric():
    p = ModelParams(1, 0.5)
    dist = exact_stationary(p, 40)
    mq = dist.mean_queue()
    assert np.allclose(mq[:10], p.lam ** np.arange(1, 11), atol=1e-8)
    assert abs(dist.probs.sum() - 1) <= 1e-12 and dist.probs.min() >= 0
    assert dist.residual <= 1e-10


def test_exact_n2_mean_first_level():
    p = ModelParams(2, 0.5)
    dist = exact_stationary(p, 80)
    assert dist.mean_queue()[0] == pytest.approx(2 * p.lam, abs=1e-8)
    assert moment_identities_check(dist)["max_abs_discrepancy"] <= 1e-8


def test_exact_limits():
    with pytest.raises(StateLimitExceeded):
        exact_stationary(ModelParams(5, 0.5), 200, depth=30, state_limit=1000)
    with pytest.raises(ConfigError):
        exact_stationary(ModelParams(7, 0.5), 50)
    assert count_states(1, 3, 2) == 3


def test_bar_examples_and_both_routes():
    p = ModelParams(3, 0.5)
    dist = exact_stationary(p, 120)
    assert bar_residual(dist, lambda q: 1.0) == 0.0
    capped = lambda q: float(min(50, sum(q)))  # noqa: E731
    assert abs(bar_residual(dist, capped)) <= 1e-9
    fh = FhField(p, 1.0)
    lifted = lift(fh.value, 3)
    a = bar_residual(dist, lifted, "matrix")
    b = bar_residual(dist, lifted, "pointwise")
    assert abs(a) <= 1e-9 and abs(b) <= 1e-9


def test_stein_identity_on_exact_law():
    # E h(X) = E(G A f - L f) when E G A f = 0 and L f = -h pointwise.
    p = ModelParams(3, 0.5)
    dist = exact_stationary(p, 120)
    fh = FhField(p, 1.0)
    n = p.n
    lifted = lift(fh.value, n)
    k = p.fluid_level(1.0)

    def stein_gap(q):
        x = ((q[0] - n) / n, q[1] / n)
        return apply_GQ(p, lifted, q, depth=dist.depth, cap=dist.cap) - apply_L(p, fh.jet(x), x)

    eh = dist.expect(lambda q: max(q[1] / n - k, 0.0))
    assert dist.expect(stein_gap) == pytest.approx(eh, abs=1e-8)


def test_exact_thm_main_n4():
    p = ModelParams(4, 0.5)
    dist = exact_stationary(p, 160)
    rep = thm_main_check(dist, 0.5, 1.0)
    assert rep["excess_holds"] and rep["scaled_mean_holds"]
    assert rep["scaled_mean_ci"] == 0.0


def test_simulate_n1_second_level():
    p = ModelParams(1, 0.5)
    est = simulate(p, 20050.0, 50.0, seed=3)
    mean = est.batch_mean_queue()[:, 1]
    hw = 2.05 * mean.std(ddof=1) / math.sqrt(mean.size)
    assert abs(mean.mean() - 0.25) <= 3 * hw


@pytest.mark.parametrize("n", [10, 100, 400])
def test_simulate_first_level_and_ordering(n):
    p = ModelParams(n, 1.0)
    est = simulate(p, 2050.0, 50.0, seed=n)
    rep = moment_identities_check(est)
    first = rep["levels"][0]
    assert abs(first["mean_queue"] - n * p.lam) <= 3 * first["ci_half_width"] + 1e-12
    mq = est.mean_queue()
    assert np.all(np.diff(mq) <= 1e-12)
    assert est.overflow_rate() <= 1e-6


def test_simulate_deterministic():
    p = ModelParams(50, 1.0)
    a = simulate(p, 300.0, 10.0, seed=9)
    b = simulate(p, 300.0, 10.0, seed=9)
    assert np.array_equal(a.batch_q_area, b.batch_q_area)
    assert a.events == b.events
    c = sample_scaled_states(p, 3, 5, 0.5, 5.0, seed=2)
    d = sample_scaled_states(p, 3, 5, 0.5, 5.0, seed=2)
    assert np.array_equal(c, d)


def test_simulate_validation():
    with pytest.raises(ConfigError):
        simulate(P10, 10.0, 20.0, seed=0)
    with pytest.raises(ConfigError):
        simulate(P10, 100.0, 10.0, seed=0, trunc_b=2)


def test_q3_bound_value_and_range():
    p = ModelParams(400, 1.0)
    bound = q3_bound(p, 2.0, 0.5)
    first = (12 + 6 * 0.5 / (0.5 - 1 / 20)) / (1 * 0.5)
    assert bound == pytest.approx(first / (0.5 - 1 / 400) * 28.0)
    assert bound > 5.0
    with pytest.raises(ConfigError):
        q3_bound(p, 2.0, 1.0)
