"""Euler scheme for the reflected diffusion limit and distance to scaled JSQ samples.

The diffusion lives in y1 <= 0, y2 >= 0:

    dY1 = sqrt(2) dW - beta dt + (-Y1 + Y2) dt - dU
    dY2 = dU - Y2 dt

where U increases only when Y1 sits at 0 and pushes the excess into Y2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import ConfigError


class SdeState(NamedTuple):
    y1: float
    y2: float
    u_cum: float


def step_euler(state: SdeState, beta: float, h: float, gaussian: float) -> SdeState:
    """One Euler step followed by the reflection at y1 = 0."""
    if not 0.0 < h < 1.0:
        raise ConfigError(f"step size must lie in (0, 1), got {h!r}", "PARAM_RANGE")
    y1 = state.y1 + (-state.y1 + state.y2 - beta) * h + math.sqrt(2.0 * h) * gaussian
    y2 = state.y2 * (1.0 - h)
    u = state.u_cum
    if y1 > 0.0:
        y2 += y1
        u += y1
        y1 = 0.0
    return SdeState(y1, max(y2, 0.0), u)


@dataclass(frozen=True)
class SdeConfig:
    step: float = 1e-3
    horizon: float = 5050.0
    burn_in: float = 50.0
    seed: int = 0
    thinning: int = 10
    replicas: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.step < 1.0:
            raise ConfigError("SDE step must lie in (0, 1)", "PARAM_RANGE")
        if not self.horizon > self.burn_in >= 0.0:
            raise ConfigError("need horizon > burn_in >= 0", "PARAM_RANGE")
        if self.thinning < 1 or self.replicas < 1:
            raise ConfigError("thinning and replicas must be positive", "PARAM_RANGE")


@dataclass
class DiffusionSamples:
    """Thinned post-burn-in samples; rows are (y1, y2), replicas stacked in order."""

    beta: float
    config: SdeConfig
    samples: np.ndarray
    per_replica: int

    def mean(self) -> np.ndarray:
        return self.samples.mean(axis=0)

    def mean_ci(self, batches: int = 30) -> np.ndarray:
        """95% half-widths from batch means over the concatenated (replica-major) sample."""
        from scipy import stats

        usable = (len(self.samples) // batches) * batches
        groups = self.samples[:usable].reshape(batches, -1, 2).mean(axis=1)
        tq = stats.t.ppf(0.975, batches - 1)
        return tq * groups.std(axis=0, ddof=1) / math.sqrt(batches)


def simulate_stationary(beta: float, config: SdeConfig, chunk: int = 1 << 18) -> DiffusionSamples:
    """Run ``config.replicas`` independent paths from the origin and keep thinned samples."""
    if not beta > 0.0:
        raise ConfigError("beta must be positive", "PARAM_RANGE")
    h = config.step
    total_steps = int(round(config.horizon / h))
    record_from = int(round(config.burn_in / h))
    per_replica = (total_steps - record_from) // config.thinning
    if per_replica < 1:
        raise ConfigError("horizon leaves no samples after burn-in", "PARAM_RANGE")
    out = np.zeros((config.replicas * per_replica, 2))
    for r, child in enumerate(np.random.SeedSequence(config.seed).spawn(config.replicas)):
        rng = np.random.default_rng(child)
        state = np.zeros(4)
        block = out[r * per_replica:(r + 1) * per_replica]
        pos = 0
        # Record on steps record_from + thinning * j, j >= 1.
        start = record_from + config.thinning
        left = start + (per_replica - 1) * config.thinning
        while int(state[3]) < left:
            todo = min(chunk, left - int(state[3]))
            pos = _kernels.sde_path(state, beta, h, rng.standard_normal(todo), start,
                                    config.thinning, block, pos)
    return DiffusionSamples(float(beta), config, out, per_replica)


def wasserstein_1d(a: np.ndarray, b: np.ndarray) -> float:
    """W1 distance between two empirical laws on the line."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == b.size:
        return float(np.mean(np.abs(a - b)))
    grid = np.concatenate([a, b])
    grid.sort(kind="mergesort")
    widths = np.diff(grid)
    fa = np.searchsorted(a, grid[:-1], side="right") / a.size
    fb = np.searchsorted(b, grid[:-1], side="right") / b.size
    return float(np.sum(np.abs(fa - fb) * widths))


MIN_INTERCHANGE_SAMPLES = 10_000


def interchange_distance(scaled_ctmc: np.ndarray, sde: np.ndarray) -> dict:
    """Coordinate-wise W1 distances between scaled chain samples and diffusion samples."""
    for name, arr in (("chain", scaled_ctmc), ("diffusion", sde)):
        if len(arr) < MIN_INTERCHANGE_SAMPLES:
            raise ConfigError(f"{name} sample has {len(arr)} rows, need at least {MIN_INTERCHANGE_SAMPLES}",
                              "SAMPLE_SIZE")
    d1 = wasserstein_1d(scaled_ctmc[:, 0], sde[:, 0])
    d2 = wasserstein_1d(scaled_ctmc[:, 1], sde[:, 1])
    return {"w1_y1": d1, "w1_y2": d2, "w1_sum": d1 + d2}


@dataclass(frozen=True)
class DecayProbe:
    """W1 distance over time between ensembles started at two points."""

    beta: float
    start_a: tuple[float, float]
    start_b: tuple[float, float]
    replicas: int
    step: float
    seed: int
    common_random_numbers: bool
    times: tuple[float, ...]
    distances: tuple[float, ...]
    noise: tuple[float, ...]

    def log_slope(self) -> float:
        """Least-squares slope of log(distance) against time (nan if fewer than two positive points)."""
        t = np.array(self.times)
        d = np.array(self.distances)
        keep = d > 0
        if keep.sum() < 2:
            return math.nan
        return float(np.polyfit(t[keep], np.log(d[keep]), 1)[0])

    def rows(self) -> list[tuple[float, float, float]]:
        return list(zip(self.times, self.distances, self.noise))


def _ensemble_distance(a: np.ndarray, b: np.ndarray) -> float:
    return wasserstein_1d(a[:, 0], b[:, 0]) + wasserstein_1d(a[:, 1], b[:, 1])


def ergodic_decay_probe(
    beta: float,
    y_a,
    y_b,
    checkpoints,
    replicas: int = 1000,
    seed: int = 0,
    step: float = 1e-3,
    common_random_numbers: bool = False,
) -> DecayProbe:
    """Run two ensembles of the Euler scheme and record their distance at each checkpoint.

    ``noise`` is the distance between the two halves of the first ensemble,
    a rough Monte Carlo floor for the reported distances.
    """
    if replicas < 1000:
        raise ConfigError("the decay probe needs at least 1000 replicas", "PARAM_RANGE")
    if not 0.0 < step < 1.0:
        raise ConfigError("SDE step must lie in (0, 1)", "PARAM_RANGE")
    times = sorted(float(t) for t in checkpoints)
    if not times or times[0] < 0.0:
        raise ConfigError("checkpoints must be nonnegative", "PARAM_RANGE")
    for y in (y_a, y_b):
        if y[0] > 0.0 or y[1] < 0.0:
            raise ConfigError(f"start point {tuple(y)!r} is outside y1 <= 0, y2 >= 0", "DOMAIN")
    seq_a, seq_b = np.random.SeedSequence(seed).spawn(2)
    rng_a = np.random.default_rng(seq_a)
    rng_b = rng_a if common_random_numbers else np.random.default_rng(seq_b)
    ens = [np.tile(np.asarray(y, dtype=float), (replicas, 1)) for y in (y_a, y_b)]
    scale = math.sqrt(2.0 * step)
    half = replicas // 2
    done = 0
    dists, noise = [], []
    for t in times:
        target = int(round(t / step))
        while done < target:
            za = rng_a.standard_normal(replicas)
            zb = za if common_random_numbers else rng_b.standard_normal(replicas)
            for e, z in ((ens[0], za), (ens[1], zb)):
                y1 = e[:, 0] + (-e[:, 0] + e[:, 1] - beta) * step + scale * z
                y2 = e[:, 1] * (1.0 - step)
                push = np.maximum(y1, 0.0)
                e[:, 0] = y1 - push
                e[:, 1] = np.maximum(y2 + push, 0.0)
            done += 1
        dists.append(_ensemble_distance(ens[0], ens[1]))
        noise.append(_ensemble_distance(ens[0][:half], ens[0][half:2 * half]))
    return DecayProbe(float(beta), (float(y_a[0]), float(y_a[1])), (float(y_b[0]), float(y_b[1])),
                      replicas, step, seed, common_random_numbers, tuple(times), tuple(dists), tuple(noise))
