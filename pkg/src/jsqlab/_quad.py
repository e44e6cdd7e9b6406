"""Adaptive quadrature engines.

Two independent rules are kept on purpose: the closed-form Stein solutions use
vectorised Gauss-Legendre panels, while the trajectory oracle uses scalar
adaptive Simpson, so an agreement between them is not a shared-code artefact.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np

from .errors import ConvergenceError

_GL_ORDER = 16
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)


def _gl_panel(fun, a: float, b: float) -> np.ndarray:
    half = 0.5 * (b - a)
    t = 0.5 * (a + b) + half * _GL_NODES
    return half * (np.asarray(fun(t)) @ _GL_WEIGHTS)


def gauss_legendre(
    fun: Callable[[np.ndarray], np.ndarray],
    breaks: Sequence[float],
    tol: float = 1e-12,
    max_depth: int = 40,
) -> np.ndarray:
    """Integrate a vector-valued integrand over consecutive break intervals.

    ``fun`` maps an array of abscissae of shape (k,) to values of shape (m, k)
    or (k,). Each panel is bisected until the two-halves estimate agrees with
    the single-panel one to within its share of ``tol``.
    """
    breaks = [float(b) for b in breaks]
    total_len = sum(abs(b - a) for a, b in zip(breaks, breaks[1:]))
    result = None
    if total_len == 0.0:
        probe = np.asarray(fun(np.array([breaks[0]])))
        return np.zeros(probe.shape[:-1])
    for a0, b0 in zip(breaks, breaks[1:]):
        if a0 == b0:
            continue
        stack = [(a0, b0, _gl_panel(fun, a0, b0), 0)]
        while stack:
            a, b, whole, depth = stack.pop()
            m = 0.5 * (a + b)
            left = _gl_panel(fun, a, m)
            right = _gl_panel(fun, m, b)
            halves = left + right
            share = tol * abs(b - a) / total_len
            if np.max(np.abs(halves - whole)) <= share or depth >= max_depth:
                if depth >= max_depth and np.max(np.abs(halves - whole)) > 1e3 * share:
                    raise ConvergenceError(
                        f"Gauss-Legendre bisection failed on [{a}, {b}]"
                    )
                result = halves if result is None else result + halves
            else:
                stack.append((a, m, left, depth + 1))
                stack.append((m, b, right, depth + 1))
    return result


def adaptive_simpson(
    fun: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    max_depth: int = 50,
) -> float:
    """Scalar adaptive Simpson with Richardson correction."""
    if a == b:
        return 0.0
    fa, fm, fb = fun(a), fun(0.5 * (a + b)), fun(b)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        a, b, fa, fm, fb, whole, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = fun(lm), fun(rm)
        left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
        right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
        delta = left + right - whole
        if abs(delta) <= 15.0 * eps or depth >= max_depth:
            if depth >= max_depth and abs(delta) > 15e3 * eps:
                raise ConvergenceError(f"adaptive Simpson failed on [{a}, {b}]")
            total += left + right + delta / 15.0
        else:
            stack.append((a, m, fa, flm, fm, left, 0.5 * eps, depth + 1))
            stack.append((m, b, fm, frm, fb, right, 0.5 * eps, depth + 1))
    return total
