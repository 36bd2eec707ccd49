"""Real orthonormal spherical harmonics.

``Y_lm`` for ``m > 0`` is ``sqrt(2) N P_l^m(cos t) cos(m p)``, for ``m < 0`` the
``sin(|m| p)`` partner, and ``N P_l(cos t)`` for ``m = 0``. The Condon-Shortley
phase is not included. Polar angle ``t`` is measured from +z, azimuth ``p``
from +x toward +y.
"""

from __future__ import annotations

import math

import numpy as np

from .bessel import L_MAX
from .errors import InvalidArgument, UnsupportedDegree

__all__ = ["real_spherical_harmonic", "assoc_legendre", "check_lm"]


def check_lm(l, m):
    l, m = int(l), int(m)
    if l < 0 or abs(m) > l:
        raise InvalidArgument(f"invalid harmonic indices (l={l}, m={m}); need |m| <= l")
    if l > L_MAX:
        raise UnsupportedDegree(f"degree {l} exceeds supported maximum {L_MAX}")
    return l, m


def assoc_legendre(l, m, x):
    """``P_l^m(x)`` for ``m >= 0`` without the Condon-Shortley phase."""
    x = np.asarray(x, dtype=np.float64)
    somx2 = np.sqrt(np.clip((1.0 - x) * (1.0 + x), 0.0, None))
    pmm = np.ones_like(x)
    fact = 1.0
    for _ in range(m):
        pmm = pmm * fact * somx2
        fact += 2.0
    if l == m:
        return pmm
    pmmp1 = x * (2 * m + 1) * pmm
    if l == m + 1:
        return pmmp1
    for ll in range(m + 2, l + 1):
        pll = (x * (2 * ll - 1) * pmmp1 - (ll + m - 1) * pmm) / (ll - m)
        pmm, pmmp1 = pmmp1, pll
    return pmmp1


def _norm(l, m):
    return math.sqrt((2 * l + 1) / (4 * math.pi) * math.factorial(l - m) / math.factorial(l + m))


def real_spherical_harmonic(l, m, theta, phi):
    """Evaluate ``Y_lm(theta, phi)``; broadcasts over array arguments."""
    l, m = check_lm(l, m)
    scalar = np.ndim(theta) == 0 and np.ndim(phi) == 0
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    am = abs(m)
    p = assoc_legendre(l, am, np.cos(theta)) * _norm(l, am)
    if m > 0:
        out = math.sqrt(2.0) * p * np.cos(am * phi)
    elif m < 0:
        out = math.sqrt(2.0) * p * np.sin(am * phi)
    else:
        out = p * np.ones_like(phi)
    return float(out) if scalar else out
