"""Lambert W branches and the C^1 smooth step used by the Stein solutions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

INV_E = math.exp(-1.0)
# Inputs this far below -1/e are snapped to the branch point instead of rejected.
BRANCH_GUARD = 1e-15

_MAX_ITER = 60


def _branch_series(x: float, sign: float) -> float:
    # Expansion of W around -1/e in p = sqrt(2(e x + 1)); sign selects the branch.
    p = sign * math.sqrt(max(2.0 * (math.e * x + 1.0), 0.0))
    return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3


def _halley(x: float, w: float, upper: bool) -> float:
    for _ in range(_MAX_ITER):
        ew = math.exp(w)
        resid = w * ew - x
        if resid == 0.0:
            break
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        step = resid / (ew * wp1 - (w + 2.0) * resid / (2.0 * wp1))
        w_new = w - step
        # Halley can overshoot across the branch point when x is within rounding of -1/e.
        if upper and w_new < -1.0:
            w_new = -1.0
        elif not upper and w_new > -1.0:
            w_new = -1.0
        if abs(w_new - w) <= 4e-16 * (1.0 + abs(w_new)):
            return w_new
        w = w_new
    return w


def _check_branch_point(x: float) -> bool:
    """True if x should be treated as exactly -1/e; raises below the guard band."""
    if x < -INV_E:
        if x >= -INV_E - BRANCH_GUARD:
            return True
        raise DomainError(f"Lambert W is real only for x >= -1/e, got {x!r}")
    return x == -INV_E


def lambert_w0(x: float) -> float:
    """Principal branch W0 on [-1/e, inf), solving w * exp(w) = x with w >= -1."""
    x = float(x)
    if math.isnan(x):
        raise DomainError("Lambert W of NaN")
    if _check_branch_point(x):
        return -1.0
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf
    if x < -0.32:
        w = _branch_series(x, 1.0)
    elif x < 3.0:
        w = math.log1p(x)
    else:
        l1 = math.log(x)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1
    return _halley(x, w, upper=True)


def lambert_wm1(x: float) -> float:
    """Lower branch W-1 on [-1/e, 0), the solution with w <= -1."""
    x = float(x)
    if math.isnan(x):
        raise DomainError("Lambert W of NaN")
    if _check_branch_point(x):
        return -1.0
    if x >= 0.0:
        raise DomainError(f"W-1 is real only on [-1/e, 0), got {x!r}")
    if x < -0.25:
        w = _branch_series(x, -1.0)
    else:
        l1 = math.log(-x)
        l2 = math.log(-l1)
        w = l1 - l2 + l2 / l1
    return _halley(x, w, upper=False)


def lambert_w0_deriv(x: float) -> float:
    """dW0/dx = W / (x (1 + W)), with the removable value 1 at x = 0."""
    x = float(x)
    if x == 0.0:
        return 1.0
    w = lambert_w0(x)
    if w == -1.0:
        raise DomainError("dW0/dx is unbounded at the branch point -1/e")
    return w / (x * (1.0 + w))


@dataclass(frozen=True)
class SmoothingSpec:
    """Transition window [lower, upper] of the smooth step."""

    lower: float
    upper: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise DomainError("smoothing window must be finite")
        if not self.upper > self.lower:
            raise DomainError(
                f"smoothing window needs lower < upper, got {self.lower!r} >= {self.upper!r}"
            )

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def knots(self) -> tuple[float, float, float]:
        return (self.lower, self.mid, self.upper)


def smooth_indicator(spec: SmoothingSpec, x: float, order: int = 0) -> float:
    """Piecewise-cubic step rising from 0 at spec.lower to 1 at spec.upper.

    The step is C^1. Its second derivative jumps at the three knots; there the
    right-hand limit is returned.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order!r}")
    lo, hi = spec.lower, spec.upper
    d = hi - lo
    if x < lo or x >= hi:
        if order == 0:
            return 0.0 if x < lo else 1.0
        return 0.0
    if x < spec.mid:
        s = x - lo
        if order == 0:
            return s * s * (4.0 / (d * d) - 4.0 * s / d**3)
        if order == 1:
            return s * (8.0 / (d * d) - 12.0 * s / d**3)
        return 8.0 / (d * d) - 24.0 * s / d**3
    r = x - hi
    if order == 0:
        return 1.0 - r * r * (4.0 * r / d**3 + 4.0 / (d * d))
    if order == 1:
        return -r * (12.0 * r / d**3 + 8.0 / (d * d))
    return -24.0 * r / d**3 - 8.0 / (d * d)


def smooth_indicator_array(spec: SmoothingSpec, x, order: int = 0) -> np.ndarray:
    """Vectorised ``smooth_indicator`` with the same knot conventions."""
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order!r}")
    x = np.asarray(x, dtype=float)
    lo, hi, d = spec.lower, spec.upper, spec.width
    s = x - lo
    r = x - hi
    inside = (x >= lo) & (x < hi)
    left = x < spec.mid
    if order == 0:
        rising = np.where(left, s * s * (4.0 / (d * d) - 4.0 * s / d**3),
                          1.0 - r * r * (4.0 * r / d**3 + 4.0 / (d * d)))
        return np.where(inside, rising, np.where(x >= hi, 1.0, 0.0))
    if order == 1:
        rising = np.where(left, s * (8.0 / (d * d) - 12.0 * s / d**3),
                          -r * (12.0 * r / d**3 + 8.0 / (d * d)))
    else:
        rising = np.where(left, 8.0 / (d * d) - 24.0 * s / d**3,
                          -24.0 * r / d**3 - 8.0 / (d * d))
    return np.where(inside, rising, 0.0)
