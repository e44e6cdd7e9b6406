import math

import numpy as np
import pytest

from jsqlab.diffusion_sim import (
    SdeConfig,
    SdeState,
    ergodic_decay_probe,
    interchange_distance,
    simulate_stationary,
    step_euler,
    wasserstein_1d,
)
from jsqlab.errors import ConfigError


def test_step_without_noise_from_boundary():
    s = step_euler(SdeState(0.0, 1.0, 0.0), 1.0, 0.01, 0.0)
    assert s.y1 == pytest.approx(0.0, abs=1e-15)
    assert s.y2 == pytest.approx(0.99)
    assert s.u_cum == pytest.approx(0.0, abs=1e-15)


def test_step_reflects_overshoot_into_second_coordinate():
    h, beta = 0.01, 1.0
    # Choose the Gaussian so the unreflected y1 lands at +0.3.
    g = (0.3 - (0.0 + 0.5 - beta) * h) / math.sqrt(2 * h)
    s = step_euler(SdeState(0.0, 0.5, 0.2), beta, h, g)
    assert s.y1 == 0.0
    assert s.y2 == pytest.approx(0.5 * (1 - h) + 0.3)
    assert s.u_cum == pytest.approx(0.5)


def test_step_tends_to_identity():
    s0 = SdeState(-1.2, 0.7, 0.0)
    prev = math.inf
    for h in (1e-2, 1e-4, 1e-6):
        s = step_euler(s0, 1.0, h, 0.3)
        gap = abs(s.y1 - s0.y1) + abs(s.y2 - s0.y2)
        assert gap < prev
        prev = gap
    assert prev < 1e-2


@pytest.mark.parametrize("h", [0.0, 1.0, 2.5, -1e-3])
def test_step_rejects_bad_size(h):
    with pytest.raises(ConfigError):
        step_euler(SdeState(0.0, 0.0, 0.0), 1.0, h, 0.0)


def test_pushing_happens_only_at_boundary():
    rng = np.random.default_rng(3)
    s = SdeState(0.0, 0.0, 0.0)
    for _ in range(20000):
        new = step_euler(s, 1.0, 1e-3, rng.standard_normal())
        assert new.y1 <= 0.0 and new.y2 >= 0.0
        if new.u_cum > s.u_cum:
            assert new.y1 == 0.0
        s = new


@pytest.fixture(scope="module")
def stationary():
    return simulate_stationary(1.0, SdeConfig(step=1e-3, horizon=2050.0, burn_in=50.0, seed=11, thinning=10))


def test_stationary_samples_in_domain(stationary):
    assert np.all(stationary.samples[:, 0] <= 0.0)
    assert np.all(stationary.samples[:, 1] >= 0.0)
    assert len(stationary.samples) == stationary.per_replica == 200_000


def test_split_half_means_agree(stationary):
    half = len(stationary.samples) // 2
    a = stationary.samples[:half].mean(axis=0)
    b = stationary.samples[half:].mean(axis=0)
    ci = stationary.mean_ci()
    assert np.all(np.abs(a - b) <= 4 * ci)


def test_simulation_is_deterministic():
    cfg = SdeConfig(step=1e-3, horizon=60.0, burn_in=10.0, seed=5, thinning=7, replicas=3)
    a = simulate_stationary(1.0, cfg).samples
    b = simulate_stationary(1.0, cfg).samples
    assert np.array_equal(a, b)
    other = simulate_stationary(1.0, SdeConfig(step=1e-3, horizon=60.0, burn_in=10.0, seed=6, thinning=7,
                                               replicas=3)).samples
    assert not np.array_equal(a, other)


def test_config_validation():
    with pytest.raises(ConfigError):
        SdeConfig(horizon=10.0, burn_in=20.0)
    with pytest.raises(ConfigError):
        SdeConfig(thinning=0)
    with pytest.raises(ConfigError):
        simulate_stationary(0.0, SdeConfig(horizon=1.0, burn_in=0.0))


def test_wasserstein_examples():
    assert wasserstein_1d([0.0, 1.0], [0.0, 1.0]) == 0.0
    assert wasserstein_1d([0.0], [2.5]) == pytest.approx(2.5)
    # Unequal sizes: point mass at 0 vs uniform over {0, 1, 2}.
    assert wasserstein_1d([0.0], [0.0, 1.0, 2.0]) == pytest.approx(1.0)


def test_interchange_distance_identity_and_permutation():
    rng = np.random.default_rng(0)
    a = np.column_stack([-rng.exponential(size=12000), rng.exponential(size=12000)])
    b = np.column_stack([-rng.exponential(1.3, size=15000), rng.exponential(0.8, size=15000)])
    assert interchange_distance(a, a.copy())["w1_sum"] == 0.0
    base = interchange_distance(a, b)
    shuffled = interchange_distance(rng.permutation(a), rng.permutation(b))
    assert shuffled["w1_sum"] == pytest.approx(base["w1_sum"], rel=1e-12)
    assert base["w1_sum"] == pytest.approx(base["w1_y1"] + base["w1_y2"])


def test_interchange_distance_needs_large_samples():
    small = np.zeros((9999, 2))
    with pytest.raises(ConfigError) as err:
        interchange_distance(small, np.zeros((20000, 2)))
    assert err.value.code == "SAMPLE_SIZE"


def test_decay_probe_same_start_with_common_numbers():
    probe = ergodic_decay_probe(1.0, (0.0, 0.0), (0.0, 0.0), [0.5, 1.0], replicas=1000,
                                common_random_numbers=True)
    assert probe.distances == (0.0, 0.0)


def test_decay_probe_distances_shrink():
    probe = ergodic_decay_probe(1.0, (0.0, 0.0), (-3.0, 3.0), [0, 0.5, 1, 2, 4, 8], replicas=1000, seed=2)
    assert probe.distances[0] == pytest.approx(6.0)
    for a, b, noise in zip(probe.distances, probe.distances[1:], probe.noise[1:]):
        assert b <= a + 2 * noise
    assert probe.distances[-1] <= 0.1 * probe.distances[0]
    assert probe.log_slope() < 0


def test_decay_probe_validation():
    with pytest.raises(ConfigError):
        ergodic_decay_probe(1.0, (0.0, 0.0), (-1.0, 1.0), [1.0], replicas=999)
    with pytest.raises(ConfigError):
        ergodic_decay_probe(1.0, (0.5, 0.0), (-1.0, 1.0), [1.0])


@pytest.mark.slow
def test_means_robust_to_step_halving():
    coarse = simulate_stationary(1.0, SdeConfig(step=2e-3, horizon=2050.0, burn_in=50.0, seed=1, thinning=5))
    fine = simulate_stationary(1.0, SdeConfig(step=1e-3, horizon=2050.0, burn_in=50.0, seed=2, thinning=10))
    tol = 4 * np.hypot(coarse.mean_ci(), fine.mean_ci()) + 0.02
    assert np.all(np.abs(coarse.mean() - fine.mean()) <= tol)
