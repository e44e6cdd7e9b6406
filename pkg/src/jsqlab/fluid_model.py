"""Deterministic fluid limit of the scaled JSQ system.

Coordinates are fluid-scaled: ``x1 = (q1 - n)/n <= 0`` is the (negative) idle
fraction and ``x2 = q2/n >= 0`` the fraction of servers with a waiting job.
Write ``b = beta/sqrt(n)`` for the spare-capacity drift. Away from the axis
``x1 = 0`` the flow is ``x1' = -x1 + x2 - b``, ``x2' = -x2``; on the axis it
slides down at speed ``b`` until ``x2 = b`` and then re-enters the interior.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import NamedTuple

from scipy.optimize import brentq

from ._quad import adaptive_simpson
from .errors import ConfigError, ConvergenceError, DomainError
from .special_fn import INV_E, BRANCH_GUARD, SmoothingSpec, lambert_w0, smooth_indicator

# Points within this distance of a separating curve count as lying on it.
ON_CURVE_TOL = 1e-10
# Trajectory integrals give up if the cost has not vanished by this time.
MAX_HORIZON = 200.0


@dataclass(frozen=True)
class ModelParams:
    """System size ``n`` and Halfin-Whitt slack ``beta`` (arrival rate per server 1 - beta/sqrt(n))."""

    n: int
    beta: float

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n!r}", "PARAM_RANGE")
        object.__setattr__(self, "n", int(self.n))
        beta = float(self.beta)
        if not math.isfinite(beta) or beta <= 0.0:
            raise ConfigError(f"beta must be positive and finite, got {self.beta!r}", "PARAM_RANGE")
        if beta >= math.sqrt(self.n):
            raise ConfigError(
                f"beta must be below sqrt(n) = {math.sqrt(self.n):g} so that the load is positive",
                "PARAM_RANGE",
            )
        object.__setattr__(self, "beta", beta)

    @cached_property
    def root_n(self) -> float:
        return math.sqrt(self.n)

    @cached_property
    def lam(self) -> float:
        """Per-server arrival rate."""
        return 1.0 - self.beta / self.root_n

    @cached_property
    def b(self) -> float:
        return self.beta / self.root_n

    def fluid_level(self, kappa: float) -> float:
        """Diffusion-scale level kappa expressed in fluid units."""
        return kappa / self.root_n

    def check_kappa(self, kappa: float, name: str = "kappa") -> float:
        kappa = float(kappa)
        if not math.isfinite(kappa) or kappa <= self.beta:
            raise ConfigError(f"{name} must exceed beta = {self.beta:g}, got {kappa!r}", "PARAM_ORDER")
        return kappa


class FluidPoint(NamedTuple):
    x1: float
    x2: float


def check_point(x: Sequence[float]) -> FluidPoint:
    """Validate membership in the closed quadrant x1 <= 0, x2 >= 0."""
    x1, x2 = (float(v) for v in x)
    if not (math.isfinite(x1) and math.isfinite(x2)):
        raise DomainError(f"point must be finite, got {(x1, x2)!r}")
    if x1 > 0.0 or x2 < 0.0:
        raise DomainError(f"point {(x1, x2)!r} lies outside x1 <= 0, x2 >= 0")
    return FluidPoint(x1, x2)


def fluid_smoothing(params: ModelParams, kappa1: float, kappa2: float) -> SmoothingSpec:
    """Smooth step switching on between fluid levels kappa1/sqrt(n) and kappa2/sqrt(n)."""
    return SmoothingSpec(params.fluid_level(kappa1), params.fluid_level(kappa2))


class Position(enum.Enum):
    BELOW = "below"
    ON = "on"
    ABOVE = "above"


@dataclass(frozen=True)
class GammaSolution:
    """Height ``nu_star`` of the separating curve at ``x1``, plus its hitting time ``eta_star``."""

    kappa: float
    x1: float
    nu_star: float
    eta_star: float
    residual_nu: float
    residual_eta: float


@lru_cache(maxsize=65536)
def _gamma_solve_cached(n: int, beta: float, kappa: float, x1: float) -> GammaSolution:
    root_n = math.sqrt(n)
    b = beta / root_n
    k = kappa / root_n
    a = x1 + b
    target = -(beta / kappa) * math.exp(-beta / kappa)

    def lhs(nu: float) -> float:
        return -(b / nu) * math.exp(-a / nu)

    if x1 == 0.0:
        return GammaSolution(kappa, x1, k, 0.0, lhs(k) - target, 0.0)

    lo = k
    hi = 2.0 * k
    for _ in range(200):
        if lhs(hi) >= target:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ConvergenceError(f"no bracket for the separating curve at x1 = {x1!r}")
    if lhs(lo) > target:
        raise ConvergenceError(f"separating-curve equation has no root above {k!r} at x1 = {x1!r}")
    nu = brentq(lambda v: lhs(v) - target, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
    eta = beta / kappa - a / nu
    resid_eta = eta - math.log(root_n * nu / kappa)
    return GammaSolution(kappa, x1, nu, eta, lhs(nu) - target, resid_eta)


def gamma_solve(params: ModelParams, kappa: float, x1: float) -> GammaSolution:
    """Solve for the point (x1, nu) whose trajectory first touches the axis at height kappa/sqrt(n).

    The returned residuals are those of the defining equation in ``nu`` and
    of the two expressions for the hitting time ``eta``.
    """
    kappa = params.check_kappa(kappa)
    x1 = float(x1)
    if not math.isfinite(x1) or x1 > 0.0:
        raise DomainError(f"x1 must be finite and <= 0, got {x1!r}")
    return _gamma_solve_cached(params.n, params.beta, kappa, x1)


def classify_vs_gamma(params: ModelParams, kappa: float, x: Sequence[float]) -> Position:
    x1, x2 = check_point(x)
    nu = gamma_solve(params, kappa, x1).nu_star
    if abs(x2 - nu) <= ON_CURVE_TOL:
        return Position.ON
    return Position.ABOVE if x2 > nu else Position.BELOW


def _w0_of_exp(log_arg: float) -> float:
    """W0(exp(log_arg)) without overflowing for large arguments."""
    if log_arg < 700.0:
        return lambert_w0(math.exp(log_arg))
    w = log_arg - math.log(log_arg)
    for _ in range(50):
        step = (w + math.log(w) - log_arg) / (1.0 + 1.0 / w)
        w -= step
        if abs(step) <= 4e-16 * w:
            break
    return w


def hitting_time(params: ModelParams, x: Sequence[float]) -> float:
    """First time the interior flow from x reaches the axis x1 = 0, or inf if it never does."""
    x1, x2 = check_point(x)
    if x1 == 0.0:
        return 0.0
    if x2 == 0.0:
        return math.inf
    b = params.b
    a = x1 + b
    log_abs_z = math.log(b) - math.log(x2) - a / x2
    if log_abs_z > -1.0:
        # Below -1/e: the path turns back before reaching the axis.
        if log_abs_z + 1.0 > BRANCH_GUARD * math.e:
            return math.inf
        w = -1.0
    else:
        w = lambert_w0(-math.exp(log_abs_z))
    eta = -a / x2 - w
    scale = abs(a / x2)
    if eta < 1e-3 * scale:
        # -a/x2 and w nearly cancel (start close to the axis); refine on a + eta x2 - b e^eta = 0.
        if eta < -1e-9 * max(1.0, scale) or x2 <= b:
            return math.inf
        eta = max(eta, 0.0)
        for _ in range(4):
            slope = x2 - b * math.exp(eta)
            if slope <= 0.0:
                break
            eta -= (a + eta * x2 - b * math.exp(eta)) / slope
        # The hit is transversal here, so a root just below 0 is rounding.
        eta = max(eta, 0.0)
    return eta


def tau_grad(params: ModelParams, x: Sequence[float]) -> tuple[float, float]:
    """Partial derivatives of the hitting time; defined where the hit is transversal."""
    x1, x2 = check_point(x)
    tau = hitting_time(params, (x1, x2))
    if math.isinf(tau):
        raise DomainError(f"hitting time is infinite at {(x1, x2)!r}")
    e = math.exp(-tau)
    w = x2 * e
    if not w > params.b:
        raise DomainError(f"tangential hit at {(x1, x2)!r}: hitting time is not differentiable")
    d1 = -e / (w - params.b)
    return d1, d1 * tau


def tilde_tau(params: ModelParams, kappa: float, x: Sequence[float]) -> float:
    """Time for the interior flow from x (with x1 <= -kappa/sqrt(n)) to rise to x1 = -kappa/sqrt(n)."""
    kappa = params.check_kappa(kappa)
    x1, x2 = check_point(x)
    k = params.fluid_level(kappa)
    if x1 > -k + 1e-15 * max(1.0, k):
        raise DomainError(f"x1 = {x1!r} is above -kappa/sqrt(n) = {-k!r}")
    if x1 >= -k:
        return 0.0
    b = params.b
    a = x1 + b
    c = k - b
    if x2 == 0.0:
        return math.log(-a / c)
    w = _w0_of_exp(math.log(c) - math.log(x2) - a / x2)
    # Equivalent to -a/x2 - w but free of cancellation when -a/x2 is large.
    return max(math.log(w * x2 / c), 0.0)


def tilde_tau_grad(params: ModelParams, kappa: float, x: Sequence[float]) -> tuple[float, float]:
    t = tilde_tau(params, kappa, x)
    x1, x2 = check_point(x)
    e = math.exp(-t)
    c = params.fluid_level(kappa) - params.b
    d1 = -e / (x2 * e + c)
    return d1, d1 * t


def _interior_flow(b: float, x1: float, x2: float, t: float) -> FluidPoint:
    e = math.exp(-t)
    return FluidPoint(-b + (x1 + b) * e + t * x2 * e, x2 * e)


@dataclass(frozen=True)
class FluidTrajectory:
    """Closed-form fluid path: interior phase, axis phase, then interior re-entry."""

    start: FluidPoint
    b: float
    hit_time: float
    boundary_exit_time: float
    hit_height: float

    @property
    def reentry_height(self) -> float:
        return min(self.hit_height, self.b)

    def at(self, t: float) -> FluidPoint:
        if t < 0.0:
            raise DomainError("time must be non-negative")
        if t < self.hit_time:
            v = _interior_flow(self.b, self.start.x1, self.start.x2, t)
            return FluidPoint(min(v.x1, 0.0), v.x2)
        if t < self.boundary_exit_time:
            return FluidPoint(0.0, self.hit_height - self.b * (t - self.hit_time))
        v = _interior_flow(self.b, 0.0, self.reentry_height, t - self.boundary_exit_time)
        return FluidPoint(min(v.x1, 0.0), v.x2)

    def phase_breaks(self) -> list[float]:
        return [t for t in (self.hit_time, self.boundary_exit_time) if math.isfinite(t)]

    def time_x2_reaches(self, level: float) -> float:
        """First time x2 drops to ``level`` (x2 is non-increasing along the path)."""
        x2 = self.start.x2
        if x2 <= level:
            return 0.0
        if level <= 0.0:
            return math.inf
        t = math.log(x2 / level)
        if t <= self.hit_time:
            return t
        if level >= self.b:
            return self.hit_time + (self.hit_height - level) / self.b
        return self.boundary_exit_time + math.log(self.reentry_height / level)


def fluid_trajectory(params: ModelParams, x: Sequence[float]) -> FluidTrajectory:
    x = check_point(x)
    b = params.b
    tau = hitting_time(params, x)
    if math.isinf(tau):
        return FluidTrajectory(x, b, math.inf, math.inf, 0.0)
    w = x.x2 * math.exp(-tau)
    exit_time = tau + max(w - b, 0.0) / b
    return FluidTrajectory(x, b, tau, exit_time, w)


def fluid_flow(params: ModelParams, x: Sequence[float], t: float) -> FluidPoint:
    """Position at time t of the fluid path started from x."""
    return fluid_trajectory(params, x).at(float(t))


@dataclass(frozen=True)
class FluidCost:
    """Running cost h(x1, x2) >= 0 with the regularity data a trajectory integral needs.

    ``x1_levels`` / ``x2_levels`` are values of -x1 / x2 where h loses
    smoothness. h must vanish on the set -x1 <= zero_neg_x1 and x2 <= zero_x2.
    """

    func: Callable[[float, float], float]
    x1_levels: tuple[float, ...] = ()
    x2_levels: tuple[float, ...] = ()
    zero_neg_x1: float = math.inf
    zero_x2: float = math.inf
    label: str = field(default="cost", compare=False)

    def __call__(self, x1: float, x2: float) -> float:
        return self.func(x1, x2)


def positive_part_cost(params: ModelParams, kappa: float) -> FluidCost:
    """h(x) = (x2 - kappa/sqrt(n)) v 0."""
    k = params.fluid_level(params.check_kappa(kappa))
    return FluidCost(lambda x1, x2: max(x2 - k, 0.0), x2_levels=(k,), zero_x2=k, label="positive_part")


def smoothed_x2_cost(params: ModelParams, kappa1: float, kappa2: float) -> FluidCost:
    spec = fluid_smoothing(params, kappa1, kappa2)
    return FluidCost(
        lambda x1, x2: smooth_indicator(spec, x2),
        x2_levels=spec.knots,
        zero_x2=spec.lower,
        label="smoothed_x2",
    )


def smoothed_neg_x1_cost(params: ModelParams, kappa1: float, kappa2: float) -> FluidCost:
    spec = fluid_smoothing(params, kappa1, kappa2)
    return FluidCost(
        lambda x1, x2: smooth_indicator(spec, -x1),
        x1_levels=spec.knots,
        zero_neg_x1=spec.lower,
        label="smoothed_neg_x1",
    )


def _x1_crossings(traj: FluidTrajectory, level: float, t0: float, t1: float) -> list[float]:
    """Times in (t0, t1) where x1 along the path equals -level (sampled bracketing)."""
    if not (math.isfinite(t1) and t1 > t0):
        return []
    def g(t: float) -> float:
        return traj.at(t).x1 + level

    grid = [t0 + (t1 - t0) * i / 256 for i in range(257)]
    vals = [g(t) for t in grid]
    roots = []
    for (ta, va), (tb, vb) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        if va == 0.0:
            roots.append(ta)
        elif va * vb < 0.0:
            roots.append(brentq(g, ta, tb, xtol=1e-15, rtol=1e-15))
    return roots


def _cost_horizon(traj: FluidTrajectory, h: Callable[[float, float], float]) -> float:
    if isinstance(h, FluidCost) and (math.isfinite(h.zero_neg_x1) or math.isfinite(h.zero_x2)):
        t_x2 = traj.time_x2_reaches(h.zero_x2) if math.isfinite(h.zero_x2) else 0.0
        t_x1 = 0.0
        if math.isfinite(h.zero_neg_x1) and -traj.start.x1 > h.zero_neg_x1:
            if h.zero_neg_x1 < traj.b:
                raise DomainError("cost support must lie beyond the fluid equilibrium")
            end = traj.hit_time if math.isfinite(traj.hit_time) else MAX_HORIZON
            hits = _x1_crossings(traj, h.zero_neg_x1, 0.0, min(end, MAX_HORIZON))
            t_x1 = hits[0] if hits else math.inf
        horizon = max(t_x1, t_x2)
    else:
        step = 0.05
        last = 0.0
        for i in range(int(MAX_HORIZON / step) + 1):
            t = i * step
            p = traj.at(t)
            if h(p.x1, p.x2) != 0.0:
                last = t
        horizon = min(last + step, MAX_HORIZON) if last > 0.0 or h(*traj.start) != 0.0 else 0.0
        if last >= MAX_HORIZON - step:
            horizon = math.inf
    if horizon > MAX_HORIZON:
        raise ConvergenceError(
            f"cost along the path from {tuple(traj.start)!r} has not vanished by t = {MAX_HORIZON}"
        )
    return horizon


def value_integral(
    params: ModelParams,
    h: Callable[[float, float], float],
    x: Sequence[float],
    tol: float = 1e-10,
) -> float:
    """Integral of h along the fluid path from x, by adaptive Simpson between kinks."""
    traj = fluid_trajectory(params, x)
    horizon = _cost_horizon(traj, h)
    if horizon == 0.0:
        return 0.0
    cuts = {0.0, horizon}
    cuts.update(t for t in traj.phase_breaks() if t < horizon)
    if isinstance(h, FluidCost):
        for lv in h.x2_levels:
            t = traj.time_x2_reaches(lv)
            if 0.0 < t < horizon:
                cuts.add(t)
        segments = sorted(cuts)
        for lv in h.x1_levels:
            for t0, t1 in zip(segments, segments[1:]):
                cuts.update(_x1_crossings(traj, lv, t0, t1))
    segments = sorted(cuts)

    def integrand(t: float) -> float:
        p = traj.at(t)
        return h(p.x1, p.x2)

    pieces = [(t0, t1) for t0, t1 in zip(segments, segments[1:]) if t1 > t0]
    share = tol / max(len(pieces), 1)
    return sum(adaptive_simpson(integrand, t0, t1, share) for t0, t1 in pieces)
