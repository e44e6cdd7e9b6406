"""Exponential Lyapunov function for the reflected diffusion limit.

``V(y) = exp(alpha * (f1 + f2)(y / sqrt(n)))`` where f1, f2 solve the fluid
equation with sources phi(-x1) and phi(x2). The diffusion generator is
``G f = (-y1 + y2 - beta) f_1 - y2 f_2 + f_11`` and the target inequality is
``G V <= -alpha c V + alpha d``.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

from .errors import ConfigError
from .fluid_model import ModelParams, fluid_smoothing
from .grid import GridSpec
from .special_fn import smooth_indicator
from .stein_solutions import FieldJet, _check_pair, f1_jet, f2_jet


@dataclass(frozen=True)
class DriftConstants:
    c: float
    d: float
    c_positive: bool


def drift_constants(beta: float, kappa1: float, kappa2: float, alpha: float) -> DriftConstants:
    """Rate c and offset d of the exponential drift inequality (c may come out negative)."""
    if not (beta > 0 and kappa2 > kappa1 > beta):
        raise ConfigError("need 0 < beta < kappa1 < kappa2", "PARAM_ORDER")
    if not alpha >= 0:
        raise ConfigError(f"alpha must be nonnegative, got {alpha!r}", "PARAM_RANGE")
    gap = kappa2 - kappa1
    log_ratio = math.log((kappa2 - beta) / (kappa1 - beta))
    c = (
        1.0
        - 12.0 * log_ratio / gap**2
        - (1.0 + kappa1 / (kappa1 - beta) * 4.0 * (kappa1 - beta) / gap) / (beta * (kappa1 - beta))
        - alpha * (4.0 * log_ratio / gap + 1.0 / beta) ** 2
    )
    d = ((kappa2 - beta) / (kappa1 - beta) * kappa2 / kappa1) ** alpha * math.exp(alpha * gap / beta)
    return DriftConstants(c, d, c > 0.0)


def _exponent_jet(params: ModelParams, kappa1: float, kappa2: float, y: Sequence[float]) -> FieldJet:
    """Jet of F = f1 + f2 in fluid coordinates at x = y / sqrt(n)."""
    x = (float(y[0]) / params.root_n, float(y[1]) / params.root_n)
    j1 = f1_jet(params, kappa1, kappa2, x)
    j2, _ = f2_jet(params, kappa1, kappa2, x)
    return FieldJet(j1.f + j2.f, j1.f1 + j2.f1, j1.f2 + j2.f2, j1.f11 + j2.f11, j1.f22 + j2.f22)


def lyapunov_jet(params: ModelParams, kappa1: float, kappa2: float, alpha: float, y: Sequence[float]) -> FieldJet:
    """Value and derivatives of V in diffusion coordinates."""
    kappa1, kappa2 = _check_pair(params, kappa1, kappa2)
    big = _exponent_jet(params, kappa1, kappa2, y)
    r = params.root_n
    v = math.exp(alpha * big.f)
    g1 = alpha * big.f1 / r
    g2 = alpha * big.f2 / r
    return FieldJet(
        v,
        v * g1,
        v * g2,
        v * (alpha * big.f11 / params.n + g1 * g1),
        v * (alpha * big.f22 / params.n + g2 * g2),
    )


def lyapunov_value(params: ModelParams, kappa1: float, kappa2: float, alpha: float, y: Sequence[float]) -> float:
    kappa1, kappa2 = _check_pair(params, kappa1, kappa2)
    return math.exp(alpha * _exponent_jet(params, kappa1, kappa2, y).f)


def apply_GY(jet: FieldJet, beta: float, y: Sequence[float]) -> float:
    """Diffusion generator applied to a field given by its jet at y."""
    y1, y2 = float(y[0]), float(y[1])
    return (-y1 + y2 - beta) * jet.f1 - y2 * jet.f2 + jet.f11


@dataclass(frozen=True)
class DriftReport:
    alpha: float
    kappa1: float
    kappa2: float
    c: float
    d: float
    c_positive: bool
    points: int
    max_excess: float
    worst_point: tuple[float, float]
    max_chain_rule_residual: float
    max_boundary_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_excess <= self.tolerance


def verify_drift(
    params: ModelParams,
    kappa1: float,
    kappa2: float,
    alpha: float,
    grid: GridSpec,
    tol: float = 1e-8,
) -> DriftReport:
    """Evaluate G V + alpha c V - alpha d on a diffusion-scale grid.

    The chain-rule residual compares G V / (alpha V) with the same quantity
    rebuilt from the fluid equations, and the boundary residual is
    |V_1 - V_2| on grid points with y1 = 0.
    """
    kappa1, kappa2 = _check_pair(params, kappa1, kappa2)
    consts = drift_constants(params.beta, kappa1, kappa2, alpha)
    if grid.scale == "fluid":
        grid = GridSpec(grid.x1_lo * params.root_n, grid.x1_hi * params.root_n, grid.n1,
                        grid.x2_lo * params.root_n, grid.x2_hi * params.root_n, grid.n2, "diffusion")
    spec = fluid_smoothing(params, kappa1, kappa2)
    worst = -math.inf
    worst_pt = (math.nan, math.nan)
    chain = 0.0
    edge = 0.0
    pts = grid.points()
    for y in pts:
        big = _exponent_jet(params, kappa1, kappa2, y)
        v = math.exp(alpha * big.f)
        r = params.root_n
        jet = FieldJet(
            v,
            v * alpha * big.f1 / r,
            v * alpha * big.f2 / r,
            v * (alpha * big.f11 / params.n + (alpha * big.f1 / r) ** 2),
            v * (alpha * big.f22 / params.n + (alpha * big.f2 / r) ** 2),
        )
        gv = apply_GY(jet, params.beta, y)
        excess = gv + alpha * consts.c * v - alpha * consts.d
        if excess > worst:
            worst, worst_pt = excess, y
        x1, x2 = y[0] / r, y[1] / r
        rebuilt = (-smooth_indicator(spec, -x1) - smooth_indicator(spec, x2)
                   + big.f11 / params.n + alpha * big.f1**2 / params.n)
        if alpha > 0:
            chain = max(chain, abs(gv / (alpha * v) - rebuilt))
        if y[0] == 0.0:
            edge = max(edge, abs(jet.f1 - jet.f2))
    return DriftReport(alpha, kappa1, kappa2, consts.c, consts.d, consts.c_positive, len(pts),
                       worst, worst_pt, chain, edge, tol)


def scan_drift(
    params: ModelParams,
    alphas: Sequence[float],
    kappa_pairs: Sequence[tuple[float, float]],
    grid: GridSpec,
) -> list[DriftReport]:
    """Drift check over a parameter sweep; invalid combinations are skipped."""
    rows = []
    for kappa1, kappa2 in kappa_pairs:
        if not (kappa2 > kappa1 > params.beta):
            continue
        for alpha in alphas:
            rows.append(verify_drift(params, kappa1, kappa2, alpha, grid))
    return rows
