"""Numerical validation suites run by ``wmcg3d check``.

Each suite returns a list of :class:`Measurement` records pairing a measured
quantity with its threshold.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass

import numpy as np

from .affine import TransformParams, compose_params, decompose_gl3
from .bessel import bessel_boundary_roots, spherical_bessel
from .conv import PaddingMode, WMCGLayer, build_kernel_bank, conv3d, grad_weights, plan_bases
from .equivariance import VolumeTransformSpec, equivariance_error, synth_volume
from .harmonics import real_spherical_harmonic
from .quadrature import adaptive_integrate, sphere_rule
from .sampling import build_layer_plan, stream

__all__ = ["Suite", "Measurement", "run_suite", "QUARTER_TURNS"]


class Suite(enum.Enum):
    Ortho = "ortho"
    Decompose = "decompose"
    Roots = "roots"
    Grad = "grad"
    Equiv = "equiv"


@dataclass(frozen=True)
class Measurement:
    name: str
    value: float
    threshold: float
    inclusive: bool = False

    @property
    def passed(self) -> bool:
        if self.inclusive:
            return bool(self.value <= self.threshold)
        return bool(self.value < self.threshold)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        op = "<=" if self.inclusive else "<"
        return f"{status}\t{self.name}\t{self.value:.6e}\t{op} {self.threshold:.1e}"


QUARTER_TURNS = {
    "x": np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]]),
    "y": np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]]),
    "z": np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
}


def random_gl3_plus(rng, n, low=-2.0, high=2.0, min_det=0.05):
    """``n`` matrices with entries uniform in ``[low, high]`` and det above ``min_det``."""
    out = []
    while len(out) < n:
        Y = rng.uniform(low, high, (3, 3))
        if np.linalg.det(Y) > min_det:
            out.append(Y)
    return out


def random_params(rng, n, bound=1.0):
    """Parameter vectors with angles in ``[-pi, pi)`` and the other entries in ``[-bound, bound]``."""
    out = []
    for _ in range(n):
        theta = rng.uniform(-math.pi, math.pi, 2)
        rest = rng.uniform(-bound, bound, 9)
        out.append(TransformParams.from_array(np.concatenate([theta, rest])))
    return out


def _ortho(cfg):
    R = cfg.kernel_grid().R
    off, diag_err = 0.0, 0.0
    for l in range(5):
        k = bessel_boundary_roots(l, R, 4)
        for a in range(4):
            diag_ref = R ** 3 / 2 * spherical_bessel(l, k[a] * R) ** 2
            for b in range(a, 4):
                val, _ = adaptive_integrate(
                    lambda r: r * r * spherical_bessel(l, k[a] * r) * spherical_bessel(l, k[b] * r), 0.0, R
                )
                if a == b:
                    diag_err = max(diag_err, abs(val - diag_ref) / diag_ref)
                else:
                    off = max(off, abs(val) / diag_ref)
    theta, phi, w = sphere_rule(12, 24)
    lm = [(l, m) for l in range(5) for m in range(-l, l + 1)]
    Y = np.stack([real_spherical_harmonic(l, m, theta, phi) for l, m in lm])
    gram = float(np.max(np.abs((Y * w) @ Y.T - np.eye(len(lm)))))
    return [
        Measurement("radial off-diagonal / diagonal (l<=4, n<=4)", off, 1e-6),
        Measurement("radial diagonal vs R^3/2 j_l(k_n R)^2", diag_err, 1e-6),
        Measurement("real harmonic Gram vs identity (l<=4)", gram, 1e-8),
    ]


def _decompose(cfg):
    rng = stream(cfg.seed, 101)
    mats = random_gl3_plus(rng, 1000)
    start = time.perf_counter()
    params = [decompose_gl3(Y) for Y in mats]
    elapsed = time.perf_counter() - start
    err = max(float(np.max(np.abs(compose_params(p) - Y) / np.abs(Y))) for p, Y in zip(params, mats))
    det_err = 0.0
    for a in random_params(stream(cfg.seed, 102), 10_000):
        ref = 2.0 ** (a.alpha + a.beta + a.gamma)
        det_err = max(det_err, abs(np.linalg.det(compose_params(a)) - ref) / ref)
    return [
        Measurement("round-trip max elementwise relative error (1000 matrices)", err, 1e-9),
        Measurement("1000 decompositions wall time [s]", elapsed, 1.0),
        Measurement("determinant law relative error (10^4 vectors)", det_err, 1e-12),
    ]


def _roots(cfg):
    residual = 0.0
    for R in (1.0, 2.5, 3.5):
        for l in range(5):
            k = bessel_boundary_roots(l, R, 8)
            residual = max(residual, float(np.max(np.abs(spherical_bessel(l - 1, k * R)))))
    l1 = 0.0
    for R in (1.0, 2.5, 3.5):
        k = bessel_boundary_roots(1, R, 8)
        l1 = max(l1, float(np.max(np.abs(k - np.arange(1, 9) * math.pi / R))))
    return [
        Measurement("max |j_{l-1}(k_n R)| (l<=4, n<=8)", residual, 1e-10),
        Measurement("l=1 roots vs n pi / R", l1, 1e-12),
    ]


def finite_difference_check(x, g_out, w, plan, indices, profile, grid, padding, step=1e-4):
    """Relative error between :func:`grad_weights` and central differences."""
    bases = plan_bases(plan, indices, profile, grid)

    def loss(weights):
        bank = build_kernel_bank(weights, indices, profile, grid, plan, bases=bases)
        return float(np.sum(g_out * conv3d(x, bank, padding)))

    analytic = grad_weights(x, g_out, plan, indices, profile, grid, padding, bases=bases)
    numeric = np.empty_like(w)
    for idx in np.ndindex(w.shape):
        wp, wm = w.copy(), w.copy()
        wp[idx] += step
        wm[idx] -= step
        numeric[idx] = (loss(wp) - loss(wm)) / (2 * step)
    return float(np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric))


def _grad(cfg):
    rng = stream(cfg.seed, 103)
    grid = cfg.kernel_grid()
    indices = cfg.basis_indices()
    plan = build_layer_plan(cfg.augmentation_config(), 2, 2, grid.k, cfg.layer.layer_id)
    size = max(grid.k + 4, 10)
    x = rng.standard_normal((2, size, size, size))
    g_out = rng.standard_normal((2, size, size, size))
    w = rng.standard_normal((2, 2, len(indices)))
    err = finite_difference_check(x, g_out, w, plan, indices, cfg.radial_profile(), grid, cfg.padding())
    return [Measurement("grad_weights vs central differences (step 1e-4)", err, 1e-5)]


def _equiv(cfg):
    grid = cfg.kernel_grid()
    hw = (grid.k - 1) // 2
    size = 16
    rng = stream(cfg.seed, 104)
    plan = build_layer_plan(cfg.augmentation_config(), 2, 2, grid.k, cfg.layer.layer_id)
    w = rng.standard_normal((2, 2, cfg.basis.count))
    layer = WMCGLayer(w, plan, cfg.basis_indices(), cfg.radial_profile(), grid, PaddingMode.Circular)
    vol = synth_volume("noise", 2, size, cfg.seed)
    ident = equivariance_error(layer, vol, VolumeTransformSpec(np.eye(3)), hw)
    out = [Measurement("identity transform error", max(ident), 0.0, inclusive=True)]
    trans = 0.0
    ref = layer(vol)
    for _ in range(20):
        t = tuple(int(v) for v in rng.integers(-size, size, 3))
        a = layer(np.roll(vol, t, axis=(1, 2, 3)))
        b = np.roll(ref, t, axis=(1, 2, 3))
        trans = max(trans, float(np.linalg.norm(a - b) / np.linalg.norm(b)))
    out.append(Measurement("integer translation rel_l2 (circular, 20 shifts)", trans, 1e-12))
    for axis, R in QUARTER_TURNS.items():
        spec = VolumeTransformSpec(R, "nearest", "wrap")
        rel, _ = equivariance_error(layer, vol, spec, hw, layer_transformed=layer.transformed(R))
        out.append(Measurement(f"quarter turn about {axis}, rotation-matched bank rel_l2", rel, 1e-6))
    return out


_SUITES = {Suite.Ortho: _ortho, Suite.Decompose: _decompose, Suite.Roots: _roots, Suite.Grad: _grad, Suite.Equiv: _equiv}


def run_suite(suite, cfg) -> list:
    return _SUITES[Suite(suite)](cfg)
