"""The JSQ Markov chain: generator, exact truncated solves and simulation.

A state is the non-increasing occupancy vector ``(q1, q2, ...)`` where
``q_i`` counts servers holding at least ``i`` jobs. Arrivals (rate
``n * lam``) join the first level that is not full; a departure happens at
rate ``q_i - q_{i+1}`` from level ``i``.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy import integrate, stats

from . import _kernels
from .errors import ConfigError, ConvergenceError, DomainError, StateLimitExceeded, TruncationOverflow
from .fluid_model import ModelParams
from .stein_solutions import FieldJet

QueueState = tuple[int, ...]

MAX_EXACT_N = 6


def check_state(q: Sequence[int], n: int) -> QueueState:
    """Validate an occupancy vector: integers in [0, n], non-increasing."""
    out = tuple(int(v) for v in q)
    if any(v != w for v, w in zip(out, q)):
        raise DomainError(f"occupancies must be integers, got {tuple(q)!r}")
    if not out:
        raise DomainError("state needs at least one level")
    if out[0] > n or out[-1] < 0:
        raise DomainError(f"occupancies must lie in [0, {n}], got {out!r}")
    if any(a < b for a, b in zip(out, out[1:])):
        raise DomainError(f"occupancies must be non-increasing, got {out!r}")
    return out


def apply_GQ(
    params: ModelParams,
    f: Callable[[QueueState], float],
    q: Sequence[int],
    *,
    depth: int | None = None,
    cap: int | None = None,
    trunc_b: int | None = None,
) -> float:
    """Generator of the chain applied to f at q.

    With ``depth`` the chain keeps at most that many levels, and with ``cap``
    at most that many jobs in total; arrivals that would break either limit
    are blocked (they leave the state unchanged). ``trunc_b`` is a hard
    limit instead: an arrival aimed past level ``trunc_b`` raises.
    """
    n = params.n
    q = check_state(q, n)
    if trunc_b is not None and len(q) >= trunc_b and all(v == n for v in q[:trunc_b]):
        raise TruncationOverflow(f"arrival at {q!r} would go past level {trunc_b}")
    if depth is not None:
        if len(q) > depth and any(q[depth:]):
            raise DomainError(f"state {q!r} has jobs beyond depth {depth}")
        q = (q + (0,) * depth)[:depth]
    fq = f(q)
    out = 0.0
    if cap is None or sum(q) < cap:
        level = next((i for i, v in enumerate(q) if v < n), len(q))
        if depth is None or level < depth:
            up = list(q) + ([0] if level == len(q) else [])
            up[level] += 1
            out += n * params.lam * (f(tuple(up)) - fq)
    for i, v in enumerate(q):
        below = q[i + 1] if i + 1 < len(q) else 0
        if v > below:
            down = list(q)
            down[i] -= 1
            out += (v - below) * (f(tuple(down)) - fq)
    return out


def lift(field_value: Callable[[tuple[float, float]], float], n: int) -> Callable[[QueueState], float]:
    """Turn a function of fluid coordinates into a function of occupancy vectors."""

    def lifted(q: QueueState) -> float:
        q2 = q[1] if len(q) > 1 else 0
        return field_value(((q[0] - n) / n, q2 / n))

    return lifted


# ---------------------------------------------------------------- exact solve


@lru_cache(maxsize=None)
def _count_states(n: int, depth: int, cap: int) -> int:
    @lru_cache(maxsize=None)
    def go(level: int, top: int, room: int) -> int:
        if level == depth:
            return 1
        return sum(go(level + 1, v, room - v) for v in range(min(top, room) + 1))

    return go(0, n, cap)


def count_states(n: int, depth: int, cap: int) -> int:
    """Number of non-increasing vectors of length ``depth`` in [0, n] with sum <= cap."""
    return _count_states(int(n), int(depth), int(cap))


def _enumerate(n: int, depth: int, cap: int) -> np.ndarray:
    rows: list[tuple[int, ...]] = []
    prefix: list[int] = []

    def go(top: int, room: int) -> None:
        if len(prefix) == depth:
            rows.append(tuple(prefix))
            return
        for v in range(min(top, room), -1, -1):
            prefix.append(v)
            go(v, room - v)
            prefix.pop()

    go(n, cap)
    return np.array(rows, dtype=np.int64).reshape(len(rows), depth)


def default_depth(params: ModelParams, cap: int, state_limit: int) -> int:
    """Depth at which the chance of all levels being full is negligible, within the state budget.

    Occupancy of level i falls off roughly like lam^(n i); aim for 1e-16.
    """
    lam = params.lam
    want = math.ceil(math.log(1e-16) / (params.n * math.log(lam))) + 1
    depth = max(2, min(want, cap))
    while depth > 2 and count_states(params.n, depth, cap) > state_limit:
        depth -= 1
    return depth


@dataclass
class ExactDistribution:
    """Stationary law of the chain truncated at ``depth`` levels and ``cap`` jobs."""

    params: ModelParams
    cap: int
    depth: int
    states: np.ndarray
    probs: np.ndarray
    generator: sp.csr_matrix = field(repr=False)
    residual: float
    sweeps: int

    @property
    def size(self) -> int:
        return self.probs.size

    def mean_queue(self) -> np.ndarray:
        """E Q_i for i = 1..depth."""
        return self.probs @ self.states

    def full_probs(self) -> np.ndarray:
        """P(Q_1 = ... = Q_k = n) for k = 0..depth."""
        full = np.cumprod(self.states == self.params.n, axis=1)
        return np.concatenate([[1.0], self.probs @ full])

    def q2_pmf(self) -> np.ndarray:
        return np.bincount(self.states[:, 1], weights=self.probs, minlength=self.params.n + 1)

    def cap_blocking(self) -> float:
        return float(self.probs[self.states.sum(axis=1) >= self.cap].sum())

    def depth_blocking(self) -> float:
        return float(self.full_probs()[-1])

    def blocked_mask(self) -> np.ndarray:
        return (self.states.sum(axis=1) >= self.cap) | np.all(self.states == self.params.n, axis=1)

    def expect(self, f: Callable[[QueueState], float]) -> float:
        return float(sum(p * f(tuple(int(v) for v in s)) for s, p in zip(self.states, self.probs)))

    # Batch views so that checks treat exact and simulated sources alike.
    def batch_mean_queue(self) -> np.ndarray:
        return self.mean_queue()[None, :]

    def batch_full_probs(self) -> np.ndarray:
        return self.full_probs()[None, :]

    def batch_q2_pmf(self) -> np.ndarray:
        return self.q2_pmf()[None, :]


def exact_stationary(
    params: ModelParams,
    cap_c: int,
    depth: int | None = None,
    state_limit: int = 200_000,
    tol: float = 1e-15,
    max_sweeps: int = 200_000,
) -> ExactDistribution:
    """Stationary distribution of the truncated chain by symmetric Gauss-Seidel."""
    n = params.n
    if n > MAX_EXACT_N:
        raise ConfigError(f"exact solves support n <= {MAX_EXACT_N}, got {n}", "PARAM_RANGE")
    cap = int(cap_c)
    if cap < 1:
        raise ConfigError("cap_c must be a positive integer", "PARAM_RANGE")
    if depth is None:
        depth = default_depth(params, cap, state_limit)
    depth = int(depth)
    if depth < 2:
        raise ConfigError("depth must be at least 2", "PARAM_RANGE")
    count = count_states(n, depth, cap)
    if count > state_limit:
        raise StateLimitExceeded(f"{count} states exceed the limit {state_limit}")

    states = _enumerate(n, depth, cap)
    index = {tuple(row): i for i, row in enumerate(states.tolist())}
    rows, cols, rates = [], [], []
    arrival = n * params.lam
    for i, q in enumerate(states.tolist()):
        if sum(q) < cap:
            level = next((j for j, v in enumerate(q) if v < n), depth)
            if level < depth:
                q[level] += 1
                rows.append(i)
                cols.append(index[tuple(q)])
                rates.append(arrival)
                q[level] -= 1
        for j in range(depth):
            below = q[j + 1] if j + 1 < depth else 0
            if q[j] > below:
                q[j] -= 1
                rows.append(i)
                cols.append(index[tuple(q)])
                rates.append(float(q[j] + 1 - below))
                q[j] += 1
    size = len(states)
    gen = sp.csr_matrix((rates, (rows, cols)), shape=(size, size))
    out_rate = np.asarray(gen.sum(axis=1)).ravel()
    gen = (gen - sp.diags(out_rate)).tocsr()
    incoming = gen.T.tocsr()
    incoming.sort_indices()
    diag = incoming.diagonal()
    x = np.full(size, 1.0 / size)
    scale = max(float(out_rate.max()), 1.0)
    sweeps = 0
    resid = math.inf
    block = 10
    while sweeps < max_sweeps:
        _kernels.gauss_seidel_stationary(incoming.indptr, incoming.indices, incoming.data, diag, x, block)
        sweeps += block
        resid = float(np.abs(incoming @ x).max())
        if resid <= tol * scale:
            break
    else:
        raise ConvergenceError(f"Gauss-Seidel stalled at residual {resid:.3e} after {sweeps} sweeps")
    return ExactDistribution(params, cap, depth, states, x, gen, resid, sweeps)


def bar_residual(dist: ExactDistribution, f: Callable[[QueueState], float], method: str = "matrix") -> float:
    """sum_q pi(q) (G f)(q) for the truncated generator.

    ``method="matrix"`` multiplies by the assembled sparse generator;
    ``"pointwise"`` calls :func:`apply_GQ` state by state, which is slower
    but independent of the assembly.
    """
    if method == "matrix":
        fvals = np.array([f(tuple(row)) for row in dist.states.tolist()])
        return float(dist.probs @ (dist.generator @ fvals))
    if method != "pointwise":
        raise ConfigError(f"unknown method {method!r}", "PARAM_RANGE")
    values = {}

    def cached(q: QueueState) -> float:
        if q not in values:
            values[q] = f(q)
        return values[q]

    total = 0.0
    for s, p in zip(dist.states.tolist(), dist.probs):
        total += p * apply_GQ(dist.params, cached, s, depth=dist.depth, cap=dist.cap)
    return total


# ---------------------------------------------------------------- simulation


@dataclass
class StationaryEstimate:
    """Time averages of one long simulated path, kept per batch for confidence intervals."""

    params: ModelParams
    horizon: float
    burn_in: float
    seed: int
    depth: int
    batch_q_area: np.ndarray
    batch_full_time: np.ndarray
    batch_q2_time: np.ndarray
    batch_len: float
    arrivals: int
    overflows: int
    events: int

    @property
    def batches(self) -> int:
        return self.batch_q_area.shape[0]

    def batch_mean_queue(self) -> np.ndarray:
        return self.batch_q_area / self.batch_len

    def batch_full_probs(self) -> np.ndarray:
        frac = self.batch_full_time / self.batch_len
        tail = np.cumsum(frac[:, ::-1], axis=1)[:, ::-1]
        return tail

    def batch_q2_pmf(self) -> np.ndarray:
        return self.batch_q2_time / self.batch_len

    def mean_queue(self) -> np.ndarray:
        return self.batch_mean_queue().mean(axis=0)

    def full_probs(self) -> np.ndarray:
        return self.batch_full_probs().mean(axis=0)

    def q2_pmf(self) -> np.ndarray:
        return self.batch_q2_pmf().mean(axis=0)

    def overflow_rate(self) -> float:
        return self.overflows / max(self.arrivals, 1)


def simulate(
    params: ModelParams,
    horizon: float,
    burn_in: float,
    seed: int,
    trunc_b: int = 12,
    batch_count: int = 30,
    chunk: int = 1 << 20,
) -> StationaryEstimate:
    """Simulate one path on [0, horizon] and average over [burn_in, horizon] in equal batches."""
    if not (horizon > burn_in > 0):
        raise ConfigError("need horizon > burn_in > 0", "PARAM_RANGE")
    if trunc_b < 3:
        raise ConfigError("trunc_b must be at least 3", "PARAM_RANGE")
    if batch_count < 2:
        raise ConfigError("need at least two batches", "PARAM_RANGE")
    n = params.n
    rng = np.random.default_rng(seed)
    q = np.zeros(trunc_b, dtype=np.int64)
    q[0] = int(round(n * params.lam))
    clock = np.zeros(1)
    counters = np.zeros(4, dtype=np.int64)
    batch_len = (horizon - burn_in) / batch_count
    q_area = np.zeros((batch_count, trunc_b))
    full_time = np.zeros((batch_count, trunc_b + 1))
    q2_time = np.zeros((batch_count, n + 1))
    arrival = n * params.lam
    done = False
    while not done:
        expo = rng.standard_exponential(chunk)
        unif = rng.random(chunk)
        _, done = _kernels.ctmc_batches(q, clock, counters, expo, unif, arrival, n,
                                        float(burn_in), float(horizon), batch_len,
                                        q_area, full_time, q2_time)
    return StationaryEstimate(params, float(horizon), float(burn_in), int(seed), trunc_b,
                              q_area, full_time, q2_time, batch_len,
                              int(counters[2]), int(counters[1]), int(counters[3]))


def sample_scaled_states(
    params: ModelParams,
    replicas: int,
    per_replica: int,
    spacing: float,
    burn_in: float,
    seed: int,
    trunc_b: int = 12,
    chunk: int = 1 << 16,
) -> np.ndarray:
    """Snapshots of ((Q1 - n)/sqrt(n), Q2/sqrt(n)) from independent replicas.

    Each replica starts at the fluid equilibrium, runs for ``burn_in`` and
    then records ``per_replica`` states ``spacing`` apart.
    """
    n = params.n
    arrival = n * params.lam
    times = burn_in + spacing * np.arange(per_replica)
    out = np.zeros((replicas * per_replica, 2))
    children = np.random.SeedSequence(seed).spawn(replicas)
    for r, child in enumerate(children):
        rng = np.random.default_rng(child)
        q = np.zeros(trunc_b, dtype=np.int64)
        q[0] = int(round(arrival))
        clock = np.zeros(1)
        counters = np.zeros(4, dtype=np.int64)
        snap = np.zeros((per_replica, 2))
        pos = 0
        while pos < per_replica:
            expo = rng.standard_exponential(chunk)
            unif = rng.random(chunk)
            _, pos = _kernels.ctmc_snapshots(q, clock, counters, expo, unif, arrival, n, times, snap, pos)
        out[r * per_replica:(r + 1) * per_replica] = snap
    out[:, 0] = (out[:, 0] - n) / params.root_n
    out[:, 1] = out[:, 1] / params.root_n
    return out


# ---------------------------------------------------------------- checks


def _summary(values: np.ndarray, level: float = 0.95) -> tuple[float, float]:
    """Mean and CI half-width of per-batch values (zero width for a single exact value)."""
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    if values.size < 2:
        return mean, 0.0
    tq = stats.t.ppf(0.5 + level / 2.0, values.size - 1)
    return mean, float(tq * values.std(ddof=1) / math.sqrt(values.size))


def moment_identities_check(source) -> dict:
    """Compare E Q_i with n lam P(Q_1 = ... = Q_{i-1} = n) for every tracked level."""
    params = source.params
    mq = source.batch_mean_queue()
    fp = source.batch_full_probs()
    rows = []
    worst = 0.0
    for i in range(mq.shape[1]):
        diff = mq[:, i] - params.n * params.lam * fp[:, i]
        mean, hw = _summary(diff)
        rows.append({"level": i + 1, "mean_queue": float(mq[:, i].mean()),
                     "predicted": float(params.n * params.lam * fp[:, i].mean()),
                     "discrepancy": mean, "ci_half_width": hw})
        worst = max(worst, abs(mean))
    return {"levels": rows, "max_abs_discrepancy": worst}


def main_bound_terms(beta: float, kappa: float) -> float:
    return 12.0 + 6.0 * kappa / (kappa - beta)


def thm_main_check(source, beta: float, kappa: float) -> dict:
    """Check the waiting-fraction bounds at level kappa.

    ``excess``: E((X2 - kappa/sqrt n) v 0) <= const/(beta sqrt n) * P(X2 >= kappa/sqrt n - 1/n).
    ``mean``: E sqrt(n) X2 <= 2 kappa + const/beta.
    """
    params = source.params
    if not kappa > beta:
        raise ConfigError("kappa must exceed beta", "PARAM_ORDER")
    n = params.n
    pmf = source.batch_q2_pmf()
    m = np.arange(pmf.shape[1])
    k = kappa / params.root_n
    const = main_bound_terms(beta, kappa)
    excess = pmf @ np.maximum(m / n - k, 0.0)
    tail = pmf @ (m >= kappa * params.root_n - 1.0 - 1e-9).astype(float)
    rhs1 = const / (beta * params.root_n) * tail
    mean2 = pmf @ (m / params.root_n)
    bound2 = 2.0 * kappa + const / beta
    e_mean, e_hw = _summary(excess)
    r_mean, r_hw = _summary(rhs1)
    g_mean, g_hw = _summary(rhs1 - excess)
    s_mean, s_hw = _summary(mean2)
    return {
        "kappa": kappa,
        "excess": e_mean,
        "excess_ci": e_hw,
        "excess_bound": r_mean,
        "excess_bound_ci": r_hw,
        "excess_margin": g_mean,
        "excess_margin_ci": g_hw,
        "excess_holds": bool(g_mean >= 0.0),
        "scaled_mean": s_mean,
        "scaled_mean_ci": s_hw,
        "scaled_mean_bound": bound2,
        "scaled_mean_margin_in_ci": (bound2 - s_mean) / s_hw if s_hw > 0 else math.inf,
        "scaled_mean_holds": bool(bound2 - s_mean >= 3.0 * s_hw),
    }


def q3_bound(params: ModelParams, kappa: float, kappa_tilde: float) -> float:
    """Upper bound on E Q_i for i >= 3 built from the waiting-fraction bound at level kappa."""
    beta = params.beta
    n = params.n
    lo = max(beta / params.root_n, 1.0 / n)
    if not (lo < kappa_tilde < 1.0):
        raise ConfigError(f"kappa_tilde must lie in ({lo:g}, 1), got {kappa_tilde!r}", "PARAM_RANGE")
    if not kappa > beta:
        raise ConfigError("kappa must exceed beta", "PARAM_ORDER")
    first = (12.0 + 6.0 * kappa_tilde / (kappa_tilde - beta / params.root_n)) / (beta * (1.0 - kappa_tilde))
    return first / (kappa_tilde - 1.0 / n) * (2.0 * kappa + main_bound_terms(beta, kappa) / beta)


def thm_q3_check(source, beta: float, kappa: float, kappa_tilde: float) -> dict:
    params = source.params
    bound = q3_bound(params, kappa, kappa_tilde)
    mq = source.batch_mean_queue()
    rows = []
    for i in range(2, mq.shape[1]):
        mean, hw = _summary(mq[:, i])
        rows.append({"level": i + 1, "mean_queue": mean, "ci_half_width": hw, "holds": bool(mean + 3 * hw <= bound)})
    q3_mean, q3_hw = _summary(mq[:, 2])
    return {"bound": bound, "kappa_tilde": kappa_tilde, "levels": rows,
            "q3_mean": q3_mean, "q3_ci": q3_hw,
            "holds": all(r["holds"] for r in rows),
            "q3_below_five": bool(q3_mean + 3 * q3_hw < 5.0)}


# ---------------------------------------------------------------- expansion identity


def _remainder(fun, lo: float, hi: float, breaks: Sequence[float]) -> float:
    if hi <= lo:
        return 0.0
    pts = sorted(b for b in breaks if lo < b < hi)
    val, _ = integrate.quad(fun, lo, hi, points=pts or None, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def expansion_gap_check(params: ModelParams, field, q: Sequence[int]) -> tuple[float, float]:
    """Both sides of the generator-difference expansion at state q.

    Left: (chain generator applied to the lifted field) minus L f at the
    scaled point. Right: boundary corrections plus integral Taylor remainders.
    ``field`` provides ``jet``, ``value``, ``x1_breaks`` and ``x2_breaks``.
    """
    n = params.n
    q = check_state(q, n)
    q = q + (0,) * max(0, 3 - len(q))
    q1, q2, q3 = q[0], q[1], q[2]
    x1, x2 = (q1 - n) / n, q2 / n
    h = 1.0 / n
    lam = params.lam
    jet: FieldJet = field.jet((x1, x2))
    lhs = apply_GQ(params, lift(field.value, n), q) - ((-x1 + x2 - params.b) * jet.f1 - x2 * jet.f2)

    def f11(u: float) -> float:
        return field.jet((u, x2)).f11

    def f22(u: float) -> float:
        return field.jet((x1, u)).f22

    def f2(u: float) -> float:
        return field.jet((x1, u)).f2

    rhs = 0.0
    if q1 == n:
        rhs += (jet.f2 - jet.f1) * lam
        if q2 == n:
            rhs -= jet.f2 * lam
    if q3:
        rhs += q3 * _remainder(f2, x2 - h, x2, field.x2_breaks(x1, x2 - h, x2))
    if q1 < n:
        lo, hi = x1, x1 + h
        rhs += n * lam * _remainder(lambda u: (hi - u) * f11(u), lo, hi, field.x1_breaks(x2, lo, hi))
    if q1 == n and q2 < n:
        lo, hi = x2, x2 + h
        rhs += n * lam * _remainder(lambda u: (hi - u) * f22(u), lo, hi, field.x2_breaks(x1, lo, hi))
    if q1 > q2:
        lo, hi = x1 - h, x1
        rhs += (q1 - q2) * _remainder(lambda u: (u - lo) * f11(u), lo, hi, field.x1_breaks(x2, lo, hi))
    if q2:
        lo, hi = x2 - h, x2
        rhs += q2 * _remainder(lambda u: (u - lo) * f22(u), lo, hi, field.x2_breaks(x1, lo, hi))
    return lhs, rhs
