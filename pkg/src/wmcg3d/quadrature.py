"""Quadrature rules used by the orthogonality checks."""

from __future__ import annotations

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = ["gauss_legendre", "composite_gauss_legendre", "adaptive_integrate", "sphere_rule"]


def gauss_legendre(a, b, n):
    x, w = leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def composite_gauss_legendre(a, b, panels, order=16):
    """Nodes/weights of ``panels`` equal Gauss-Legendre panels on ``[a, b]``."""
    x, w = leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    nodes = edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def adaptive_integrate(f, a, b, min_nodes=10_000, order=16, rtol=1e-13, max_levels=6):
    """Integrate a vectorized ``f`` by panel doubling until two levels agree.

    Starts from at least ``min_nodes`` nodes. Returns ``(value, nodes_used)``.
    """
    panels = max(1, -(-min_nodes // order))
    x, w = composite_gauss_legendre(a, b, panels, order)
    fx = f(x)
    prev = float(np.dot(w, fx))
    for _ in range(max_levels):
        panels *= 2
        x, w = composite_gauss_legendre(a, b, panels, order)
        fx = f(x)
        cur = float(np.dot(w, fx))
        # tolerance against the integral of |f| so near-zero results converge
        scale = float(np.dot(w, np.abs(fx)))
        if abs(cur - prev) <= rtol * max(scale, 1e-300):
            return cur, x.size
        prev = cur
    return prev, x.size


def sphere_rule(n_theta, n_phi):
    """Product rule on the unit sphere: Gauss-Legendre in cos(theta) times
    uniform azimuth. Exact for spherical polynomials of degree
    ``< min(2 n_theta, n_phi)``.

    Returns ``theta, phi, weights`` as flat arrays.
    """
    ct, wt = leggauss(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    wp = np.full(n_phi, 2.0 * np.pi / n_phi)
    T, P = np.meshgrid(np.arccos(ct), phi, indexing="ij")
    W = np.outer(wt, wp)
    return T.ravel(), P.ravel(), W.ravel()
