"""Closed-form solutions of the fluid Poisson equation L f = -h.

``L f = (-x1 + x2 - b) f_1 - x2 f_2`` is the generator of the interior fluid
flow, and every solution also satisfies ``f_1 = f_2`` on the axis ``x1 = 0``.
Three right-hand sides are provided:

* ``f_h_jet``: h = (x2 - kappa/sqrt(n)) v 0, fully explicit.
* ``f1_jet``: h = phi(-x1), a smoothed indicator of many idle servers.
* ``f2_jet``: h = phi(x2), a smoothed indicator of many waiting jobs.

Here phi switches on between kappa1/sqrt(n) and kappa2/sqrt(n). The last two
involve one-dimensional integrals of phi, evaluated by adaptive quadrature.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._quad import gauss_legendre
from .errors import DomainError
from .fluid_model import (
    ModelParams,
    Position,
    check_point,
    classify_vs_gamma,
    fluid_smoothing,
    gamma_solve,
    hitting_time,
    tilde_tau,
)
from .grid import GridSpec
from .special_fn import SmoothingSpec, smooth_indicator, smooth_indicator_array

QUAD_TOL = 1e-12


@dataclass(frozen=True)
class FieldJet:
    """Value and partial derivatives of a scalar field at one point."""

    f: float
    f1: float
    f2: float
    f11: float
    f22: float
    f12: float | None = None

    def as_tuple(self) -> tuple[float, ...]:
        return (self.f, self.f1, self.f2, self.f11, self.f22)


ZERO_JET = FieldJet(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


class Region(enum.Enum):
    """Pieces of the quadrant on which the phi(x2) solution has one formula."""

    S0 = "S0"  # x2 below the smoothing window
    S1 = "S1"  # path reaches the axis below the window, or never
    S2 = "S2"  # path reaches the axis inside the window
    S3 = "S3"  # path reaches the axis above the window


def apply_L(params: ModelParams, jet: FieldJet, x: Sequence[float]) -> float:
    x1, x2 = check_point(x)
    return (-x1 + x2 - params.b) * jet.f1 - x2 * jet.f2


# ---------------------------------------------------------------- f_h


def _f_h_lower(k: float, x2: float) -> FieldJet:
    if x2 <= k:
        return ZERO_JET
    return FieldJet(x2 - k - k * math.log(x2 / k), 0.0, 1.0 - k / x2, 0.0, k / (x2 * x2), 0.0)


def _f_h_upper(params: ModelParams, k: float, x1: float, x2: float) -> FieldJet:
    b = params.b
    c = params.root_n / params.beta  # equals 1/b
    tau = hitting_time(params, (x1, x2))
    e = math.exp(-tau)
    w = x2 * e
    t1 = -e / (w - b)
    t2 = t1 * tau
    gap = w - k
    bracket = (w - b) / x2 + tau * e
    f = x2 * (1.0 - e) - k * tau + 0.5 * c * gap * gap
    f1 = c * e * gap
    f2 = 1.0 - k / x2 + c * gap * bracket
    f11 = c * e * e * (w + gap) / (w - b)
    f12 = c * (-t2 * e) * gap + c * e * (e - t2 * x2 * e)
    f22 = (k / (x2 * x2) + c * (e - t1 * tau * x2 * e) * bracket
           + c * gap * (b / (x2 * x2) - t1 * tau * tau * e))
    return FieldJet(f, f1, f2, f11, f22, f12)


def f_h_jet(params: ModelParams, kappa: float, x: Sequence[float]) -> FieldJet:
    """Solution for h = (x2 - kappa/sqrt(n)) v 0, with the convention f = 0 for x2 <= kappa/sqrt(n)."""
    kappa = params.check_kappa(kappa)
    x1, x2 = check_point(x)
    k = params.fluid_level(kappa)
    if x2 <= k:
        return ZERO_JET
    if classify_vs_gamma(params, kappa, (x1, x2)) is Position.ABOVE:
        return _f_h_upper(params, k, x1, x2)
    return _f_h_lower(k, x2)


# ---------------------------------------------------------------- f^(1)


def f1_jet(params: ModelParams, kappa1: float, kappa2: float, x: Sequence[float]) -> FieldJet:
    """Solution for h = phi(-x1)."""
    kappa1, kappa2 = _check_pair(params, kappa1, kappa2)
    spec = fluid_smoothing(params, kappa1, kappa2)
    x1, x2 = check_point(x)
    if -x1 <= spec.lower:
        return ZERO_JET
    b = params.b
    a = x1 + b
    t_end = tilde_tau(params, kappa1, (x1, x2))
    if -x1 >= spec.upper:
        t_start = tilde_tau(params, kappa2, (x1, x2))
    else:
        t_start = 0.0
    breaks = [t_start]
    if -x1 > spec.mid:
        t_mid = tilde_tau(params, 0.5 * (kappa1 + kappa2), (x1, x2))
        if t_start < t_mid < t_end:
            breaks.append(t_mid)
    breaks.append(t_end)

    def integrand(t: np.ndarray) -> np.ndarray:
        e = np.exp(-t)
        g = b - a * e - x2 * t * e
        p0 = smooth_indicator_array(spec, g, 0)
        p1 = smooth_indicator_array(spec, g, 1)
        p2 = smooth_indicator_array(spec, g, 2)
        e2p2 = e * e * p2
        return np.stack([p0, -e * p1, -t * e * p1, e2p2, t * t * e2p2, t * e2p2])

    val, d1, d2, d11, d22, d12 = gauss_legendre(integrand, breaks, QUAD_TOL)
    return FieldJet(float(t_start + val), float(d1), float(d2), float(d11), float(d22), float(d12))


# ---------------------------------------------------------------- f^(2)


def _check_pair(params: ModelParams, kappa1: float, kappa2: float) -> tuple[float, float]:
    kappa1 = params.check_kappa(kappa1, "kappa1")
    kappa2 = params.check_kappa(kappa2, "kappa2")
    if not kappa2 > kappa1:
        raise DomainError(f"kappa2 must exceed kappa1, got {kappa1!r} >= {kappa2!r}", "PARAM_ORDER")
    return kappa1, kappa2


def _phi_moments(spec: SmoothingSpec, lo: float, hi: float) -> tuple[float, float]:
    """(int phi(u)/u du, int phi(u) du) over [lo, hi], lo <= hi, lo > 0."""
    over_u = 0.0
    plain = 0.0
    top = spec.upper
    if hi > top:
        start = max(lo, top)
        over_u += math.log(hi / start)
        plain += hi - start
    a = max(lo, spec.lower)
    c = min(hi, top)
    if c > a:
        breaks = [a] + [k for k in (spec.mid,) if a < k < c] + [c]

        def integrand(u: np.ndarray) -> np.ndarray:
            p = smooth_indicator_array(spec, u, 0)
            return np.stack([p / u, p])

        extra = gauss_legendre(integrand, breaks, QUAD_TOL)
        over_u += float(extra[0])
        plain += float(extra[1])
    return over_u, plain


def f2_region(params: ModelParams, kappa1: float, kappa2: float, x: Sequence[float]) -> Region:
    kappa1, kappa2 = _check_pair(params, kappa1, kappa2)
    x1, x2 = check_point(x)
    if x2 <= params.fluid_level(kappa1):
        return Region.S0
    if classify_vs_gamma(params, kappa1, (x1, x2)) is not Position.ABOVE:
        return Region.S1
    if classify_vs_gamma(params, kappa2, (x1, x2)) is not Position.ABOVE:
        return Region.S2
    return Region.S3


def f2_jet(
    params: ModelParams, kappa1: float, kappa2: float, x: Sequence[float]
) -> tuple[FieldJet, Region]:
    """Solution for h = phi(x2) and the region whose formula was used."""
    region = f2_region(params, kappa1, kappa2, x)
    spec = fluid_smoothing(params, kappa1, kappa2)
    x1, x2 = check_point(x)
    c = 1.0 / params.b
    if region is Region.S0:
        return ZERO_JET, region
    if region is Region.S1:
        over_u, _ = _phi_moments(spec, spec.lower, x2)
        p0 = smooth_indicator(spec, x2, 0)
        p1 = smooth_indicator(spec, x2, 1)
        return FieldJet(over_u, 0.0, p0 / x2, 0.0, p1 / x2 - p0 / (x2 * x2), 0.0), region

    tau = hitting_time(params, (x1, x2))
    e = math.exp(-tau)
    w = x2 * e
    t1 = -e / (w - params.b)
    t2 = t1 * tau
    if region is Region.S3:
        _, window = _phi_moments(spec, spec.lower, spec.upper)
        f = tau + (w - spec.upper) * c + c * window
        return FieldJet(f, c * e, c * e * (tau + 1.0), -t1 * c * e, -c * e * tau * t2, -c * e * t2), region

    over_u, _ = _phi_moments(spec, w, x2)
    _, plain = _phi_moments(spec, spec.lower, w)
    px, px1 = smooth_indicator(spec, x2, 0), smooth_indicator(spec, x2, 1)
    pw, pw1 = smooth_indicator(spec, w, 0), smooth_indicator(spec, w, 1)
    w2 = e * (1.0 - x2 * t2)
    f = over_u + c * plain
    f1 = c * pw * e
    f2 = (px - pw) / x2 + c * pw * e * (tau + 1.0)
    f11 = -t1 * c * (pw * e + x2 * e * e * pw1)
    f12 = c * (pw1 * w2 * e - pw * e * t2)
    f22 = (px1 / x2 - px / (x2 * x2) - pw1 * w2 / x2 + pw / (x2 * x2)
           + c * pw1 * w2 * e * (tau + 1.0) - c * pw * e * tau * t2)
    return FieldJet(f, f1, f2, f11, f22, f12), region


# ---------------------------------------------------------------- field objects


class FhField:
    """f_h bound to (params, kappa), with the kink locations quadrature needs."""

    def __init__(self, params: ModelParams, kappa: float):
        self.params = params
        self.kappa = params.check_kappa(kappa)
        self.level = params.fluid_level(self.kappa)

    def jet(self, x: Sequence[float]) -> FieldJet:
        return f_h_jet(self.params, self.kappa, x)

    def value(self, x: Sequence[float]) -> float:
        return self.jet(x).f

    def x2_breaks(self, x1: float, lo: float, hi: float) -> list[float]:
        nu = gamma_solve(self.params, self.kappa, min(x1, 0.0)).nu_star
        return [v for v in (self.level, nu) if lo < v < hi]

    def x1_breaks(self, x2: float, lo: float, hi: float) -> list[float]:
        """Crossings of the separating curve along a horizontal segment (endpoint test)."""
        if x2 <= self.level:
            return []
        lo_c = min(lo, 0.0)
        hi_c = min(hi, 0.0)

        def gap(u: float) -> float:
            return x2 - gamma_solve(self.params, self.kappa, u).nu_star

        g_lo, g_hi = gap(lo_c), gap(hi_c)
        if g_lo * g_hi < 0.0:
            return [brentq(gap, lo_c, hi_c, xtol=1e-15, rtol=1e-15)]
        return []


@dataclass(frozen=True)
class QuadraticField:
    """Polynomial test field c0 x1^2 + c1 x1 x2 + c2 x2^2 + c3 x1 + c4 x2."""

    coeffs: tuple[float, float, float, float, float] = field(default=(1.0, 0.5, -0.7, 0.3, -1.1))

    def jet(self, x: Sequence[float]) -> FieldJet:
        a, m, c, d, e = self.coeffs
        x1, x2 = float(x[0]), float(x[1])
        return FieldJet(
            a * x1 * x1 + m * x1 * x2 + c * x2 * x2 + d * x1 + e * x2,
            2 * a * x1 + m * x2 + d,
            m * x1 + 2 * c * x2 + e,
            2 * a,
            2 * c,
            m,
        )

    def value(self, x: Sequence[float]) -> float:
        return self.jet(x).f

    def x1_breaks(self, x2: float, lo: float, hi: float) -> list[float]:
        return []

    def x2_breaks(self, x1: float, lo: float, hi: float) -> list[float]:
        return []


# ---------------------------------------------------------------- grid checks


def solution_jet(params: ModelParams, which: str, x: Sequence[float], *, kappa: float | None = None,
                 kappa1: float | None = None, kappa2: float | None = None) -> FieldJet:
    if which == "fh":
        return f_h_jet(params, kappa, x)
    if which == "f1":
        return f1_jet(params, kappa1, kappa2, x)
    if which == "f2":
        return f2_jet(params, kappa1, kappa2, x)[0]
    raise DomainError(f"unknown solution {which!r}; expected fh, f1 or f2")


def source_term(params: ModelParams, which: str, x: Sequence[float], *, kappa: float | None = None,
                kappa1: float | None = None, kappa2: float | None = None) -> float:
    """The h for which ``solution_jet(which)`` solves L f = -h."""
    x1, x2 = check_point(x)
    if which == "fh":
        return max(x2 - params.fluid_level(kappa), 0.0)
    spec = fluid_smoothing(params, kappa1, kappa2)
    if which == "f1":
        return smooth_indicator(spec, -x1)
    if which == "f2":
        return smooth_indicator(spec, x2)
    raise DomainError(f"unknown solution {which!r}; expected fh, f1 or f2")


@dataclass(frozen=True)
class ResidualReport:
    which: str
    grid: str
    points: int
    max_residual: float
    worst_point: tuple[float, float]
    max_boundary_residual: float
    boundary_points: int

    def passed(self, tol: float, boundary_tol: float | None = None) -> bool:
        bt = tol if boundary_tol is None else boundary_tol
        return self.max_residual <= tol and self.max_boundary_residual <= bt


def pde_residual_scan(params: ModelParams, which: str, grid: GridSpec, **levels: float) -> ResidualReport:
    """Max of |L f + h| over the grid, and of |f_1 - f_2| on grid points with x1 = 0."""
    grid = grid.to_fluid(params.root_n)
    worst = 0.0
    worst_pt = (math.nan, math.nan)
    bworst = 0.0
    nb = 0
    pts = grid.points()
    for x in pts:
        jet = solution_jet(params, which, x, **levels)
        r = abs(apply_L(params, jet, x) + source_term(params, which, x, **levels))
        if r > worst or math.isnan(r):
            worst, worst_pt = r, x
        if x[0] == 0.0:
            nb += 1
            bworst = max(bworst, abs(jet.f1 - jet.f2))
    return ResidualReport(which, str(grid), len(pts), worst, worst_pt, bworst, nb)


@dataclass
class BoundReport:
    checks: dict[str, dict] = field(default_factory=dict)

    def record(self, name: str, value: float, bound: float, x, *, lower: bool = False) -> None:
        """Track the worst violation of value <= bound (or value >= bound if lower)."""
        entry = self.checks.setdefault(name, {"bound": bound, "violations": 0, "worst": -math.inf,
                                              "worst_point": None, "evaluated": 0})
        entry["evaluated"] += 1
        slack = 1e-12 * max(1.0, abs(bound))
        excess = (bound - value) if lower else (value - bound)
        if excess > entry["worst"]:
            entry["worst"] = excess
            entry["worst_point"] = list(x)
        if excess > slack:
            entry["violations"] += 1

    @property
    def violations(self) -> int:
        return sum(c["violations"] for c in self.checks.values())

    @property
    def passed(self) -> bool:
        return self.violations == 0


def f_h_bound_report(params: ModelParams, kappa: float, grid: GridSpec) -> BoundReport:
    """Sign and size checks on the second derivatives of f_h."""
    kappa = params.check_kappa(kappa)
    grid = grid.to_fluid(params.root_n)
    k = params.fluid_level(kappa)
    scale = params.root_n / params.beta
    b11 = scale * (kappa / (kappa - params.beta) + 1.0)
    b22 = scale * (5.0 + 2.0 * kappa / (kappa - params.beta))
    rep = BoundReport()
    for x in grid.points():
        jet = f_h_jet(params, kappa, x)
        rep.record("f11_nonneg", jet.f11, 0.0, x, lower=True)
        rep.record("f22_nonneg", jet.f22, 0.0, x, lower=True)
        rep.record("f12_nonneg", jet.f12, 0.0, x, lower=True)
        if x[1] < k:
            rep.record("zero_below_level", abs(jet.f11) + abs(jet.f22), 0.0, x)
        else:
            rep.record("f11_upper", jet.f11, b11, x)
            rep.record("f22_upper", jet.f22, b22, x)
    return rep


def smoothed_bound_report(params: ModelParams, kappa1: float, kappa2: float, grid: GridSpec) -> BoundReport:
    """First/second x1-derivative bounds for the phi(-x1) and phi(x2) solutions, plus box bounds."""
    kappa1, kappa2 = _check_pair(params, kappa1, kappa2)
    grid = grid.to_fluid(params.root_n)
    beta = params.beta
    gap = kappa2 - kappa1
    log_ratio = math.log((kappa2 - beta) / (kappa1 - beta))
    n = params.n
    bounds = {
        "f1_first": 4.0 * params.root_n / gap * log_ratio,
        "f1_second": 12.0 * n / gap**2 * log_ratio,
        "f2_first": params.root_n / beta,
        "f2_second": n / (beta * (kappa1 - beta)) * (1.0 + kappa1 / (kappa1 - beta) * 4.0 * (kappa1 - beta) / gap),
        "f1_box": log_ratio,
        "f2_box": math.log(kappa2 / kappa1) + gap / beta,
    }
    box = params.fluid_level(kappa2)
    rep = BoundReport()
    for x in grid.points():
        j1 = f1_jet(params, kappa1, kappa2, x)
        j2, _ = f2_jet(params, kappa1, kappa2, x)
        rep.record("f1_first", abs(j1.f1), bounds["f1_first"], x)
        rep.record("f1_second", abs(j1.f11), bounds["f1_second"], x)
        rep.record("f2_first", abs(j2.f1), bounds["f2_first"], x)
        rep.record("f2_second", abs(j2.f11), bounds["f2_second"], x)
        if -box <= x[0] and x[1] <= box:
            rep.record("f1_box", j1.f, bounds["f1_box"], x)
            rep.record("f2_box", j2.f, bounds["f2_box"], x)
    return rep
