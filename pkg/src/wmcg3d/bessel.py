"""Spherical Bessel functions of the first kind and boundary-condition roots."""

from __future__ import annotations

import functools
import math

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidArgument, UnsupportedDegree, WMCGError

__all__ = ["L_MAX", "spherical_bessel", "bessel_boundary_roots"]

L_MAX = 8
MAX_ROOTS = 16

# Ascending series is used below this offset from l; beyond it the
# closed-form upward recurrence is stable.
_SERIES_SWITCH = 0.5
_SERIES_TERMS = 80


def _double_factorial_odd(l):
    # (2l+1)!!
    out = 1.0
    for k in range(3, 2 * l + 2, 2):
        out *= k
    return out


def _series(l, x):
    """j_l(x) = x^l/(2l+1)!! * sum_k (-x^2/2)^k / (k! (2l+3)(2l+5)...(2l+2k+1))."""
    half_sq = -0.5 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, _SERIES_TERMS):
        term = term * half_sq / (k * (2 * l + 2 * k + 1))
        total = total + term
        if np.all(np.abs(term) <= 1e-18 * np.abs(total)):
            break
    return x ** l / _double_factorial_odd(l) * total


def _recurrence(l, x):
    s, c = np.sin(x), np.cos(x)
    j_prev = s / x
    if l == 0:
        return j_prev
    j = s / (x * x) - c / x
    for n in range(1, l):
        j_prev, j = j, (2 * n + 1) / x * j - j_prev
    return j


def spherical_bessel(l, x):
    """Spherical Bessel function ``j_l(x)`` for ``0 <= l <= 8`` and ``x >= 0``.

    Accepts scalars or arrays for ``x``; scalars return a Python float.
    ``l = -1`` evaluates the extension ``cos(x)/x`` used by the ``l = 0``
    boundary condition.
    """
    l = int(l)
    if l > L_MAX:
        raise UnsupportedDegree(f"degree {l} exceeds supported maximum {L_MAX}")
    if l < -1:
        raise InvalidArgument(f"degree must be >= -1, got {l}")
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise InvalidArgument("x must be finite")
    if l == -1:
        with np.errstate(divide="ignore"):
            out = np.cos(x) / x
    else:
        out = np.empty_like(x)
        small = np.abs(x) < l + _SERIES_SWITCH
        if np.any(small):
            out[small] = _series(l, x[small])
        big = ~small
        if np.any(big):
            out[big] = _recurrence(l, x[big])
    return float(out) if scalar else out


@functools.lru_cache(maxsize=None)
def _unit_roots(order, count):
    """First ``count`` positive zeros of ``j_order`` (order may be -1)."""
    if order == -1:
        return tuple((n - 0.5) * math.pi for n in range(1, count + 1))
    if order == 0:
        return tuple(n * math.pi for n in range(1, count + 1))

    def f(t):
        return spherical_bessel(order, t)

    step = 0.05
    roots = []
    # zeros of j_order lie beyond `order`; start clear of the zero at the origin
    lo = 0.5
    f_lo = f(lo)
    upper = (count + order + 2) * math.pi
    while len(roots) < count:
        hi = lo + step
        if hi > upper:
            raise WMCGError(f"root bracketing failed for order {order}, count {count}")
        f_hi = f(hi)
        if f_lo == 0.0:
            roots.append(lo)
        elif f_lo * f_hi < 0.0:
            roots.append(brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))
        lo, f_lo = hi, f_hi
    return tuple(roots)


def bessel_boundary_roots(l: int, R: float, count: int) -> np.ndarray:
    """Radial wavenumbers ``k_n`` with ``j_{l-1}(k_n R) = 0``, strictly increasing."""
    l = int(l)
    count = int(count)
    R = float(R)
    if l < 0 or l > L_MAX:
        raise UnsupportedDegree(f"degree {l} outside 0..{L_MAX}")
    if not (math.isfinite(R) and R > 0):
        raise InvalidArgument(f"R must be positive, got {R}")
    if count < 1 or count > MAX_ROOTS:
        raise InvalidArgument(f"count must be in 1..{MAX_ROOTS}, got {count}")
    return np.asarray(_unit_roots(l - 1, count), dtype=np.float64) / R
