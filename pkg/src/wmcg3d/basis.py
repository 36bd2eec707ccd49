"""Spherical Fourier-Bessel and Gaussian-shell filter bases on kernel grids.

A basis function is ``radial(r) * Y_lm(theta, phi)`` with compact support
``r <= R``. For the Fourier-Bessel profile the radial part is ``j_l(k_n r)``
where ``k_n`` is the n-th root of ``j_{l-1}(k R) = 0``; the Gaussian-shell
profile uses ``exp(-(r - n)^2 / (2 sigma^2))``.

Grid arrays are indexed ``[z, y, x]``. Voxel centres sit at integer offsets
from the grid centre, and transforms act on physical ``(x, y, z)`` vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .affine import as_mat3
from .bessel import L_MAX, MAX_ROOTS, bessel_boundary_roots, spherical_bessel
from .errors import DegenerateKernel, InvalidArgument, NotInGroup
from .harmonics import check_lm, real_spherical_harmonic
from .quadrature import composite_gauss_legendre, sphere_rule

__all__ = [
    "BasisIndex",
    "SphericalBessel",
    "GaussianShell",
    "RadialProfile",
    "KernelGrid",
    "SampledKernel",
    "eval_basis",
    "enumerate_bases",
    "valid_basis_counts",
    "sample_on_grid",
    "sample_bases",
    "gram_matrix",
    "to_spherical",
]


@dataclass(frozen=True, order=True)
class BasisIndex:
    l: int
    m: int
    n: int

    def __post_init__(self):
        check_lm(self.l, self.m)
        if int(self.n) < 1:
            raise InvalidArgument(f"radial index n must be >= 1, got {self.n}")
        if int(self.n) > MAX_ROOTS:
            raise InvalidArgument(f"radial index n must be <= {MAX_ROOTS}, got {self.n}")
        object.__setattr__(self, "l", int(self.l))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "n", int(self.n))

    def __str__(self):
        return f"(l={self.l},m={self.m},n={self.n})"


@dataclass(frozen=True)
class SphericalBessel:
    name = "sFB"


@dataclass(frozen=True)
class GaussianShell:
    sigma: float = 0.5
    name = "sph"

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidArgument(f"sigma must be positive, got {self.sigma}")


RadialProfile = Union[SphericalBessel, GaussianShell]


@dataclass(frozen=True)
class KernelGrid:
    """Cubic ``k x k x k`` grid; ``R`` defaults to ``(k - 1)/2 + 0.5``."""

    k: int
    R: float = None

    def __post_init__(self):
        k = int(self.k)
        if k < 1 or k % 2 == 0:
            raise InvalidArgument(f"kernel size must be odd and positive, got {self.k}")
        R = (k - 1) / 2 + 0.5 if self.R is None else float(self.R)
        if not (math.isfinite(R) and R > 0):
            raise InvalidArgument(f"support radius must be positive, got {self.R}")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "R", R)

    @property
    def half(self) -> int:
        return (self.k - 1) // 2

    def coords(self) -> np.ndarray:
        """Physical ``(x, y, z)`` offsets of all voxels, shape ``(k**3, 3)``,
        in C order of the ``[z, y, x]`` array."""
        r = np.arange(self.k, dtype=np.float64) - self.half
        Z, Y, X = np.meshgrid(r, r, r, indexing="ij")
        return np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)


@dataclass(frozen=True)
class SampledKernel:
    values: np.ndarray
    index: BasisIndex
    applied_transform: np.ndarray = field(default_factory=lambda: np.eye(3))
    applied_shift: tuple = (0, 0, 0)


def to_spherical(points):
    """``(r, theta, phi)`` of ``(..., 3)`` points; the origin maps to angles 0."""
    p = np.asarray(points, dtype=np.float64)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    r = np.sqrt(x * x + y * y + z * z)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_t = np.where(r > 0, z / np.where(r > 0, r, 1.0), 1.0)
    theta = np.arccos(np.clip(cos_t, -1.0, 1.0))
    phi = np.mod(np.arctan2(y, x), 2.0 * np.pi)
    return r, theta, phi


def _radial(l, n, r, profile, R):
    if isinstance(profile, SphericalBessel):
        k_n = bessel_boundary_roots(l, R, n)[n - 1]
        return spherical_bessel(l, k_n * r)
    if isinstance(profile, GaussianShell):
        return np.exp(-0.5 * (r - n) ** 2 / profile.sigma ** 2)
    raise InvalidArgument(f"unknown radial profile {profile!r}")


def _eval_many(indices, profile, points, R):
    """Evaluate each index at ``points`` (N, 3); returns ``(J, N)``."""
    r, theta, phi = to_spherical(points)
    inside = r <= R
    out = np.zeros((len(indices), r.size))
    ri, ti, pi_ = r[inside], theta[inside], phi[inside]
    radial_cache = {}
    angular_cache = {}
    for j, idx in enumerate(indices):
        key = (idx.l, idx.n)
        if key not in radial_cache:
            radial_cache[key] = _radial(idx.l, idx.n, ri, profile, R)
        akey = (idx.l, idx.m)
        if akey not in angular_cache:
            angular_cache[akey] = real_spherical_harmonic(idx.l, idx.m, ti, pi_)
        out[j, inside] = radial_cache[key] * angular_cache[akey]
    return out


def eval_basis(index: BasisIndex, profile: RadialProfile, point, R: float):
    """Basis value at one point ``(x, y, z)`` or at an ``(N, 3)`` array of points."""
    if not isinstance(index, BasisIndex):
        index = BasisIndex(*index)
    R = float(R)
    if not (math.isfinite(R) and R > 0):
        raise InvalidArgument(f"R must be positive, got {R}")
    pts = np.asarray(point, dtype=np.float64)
    single = pts.ndim == 1
    vals = _eval_many([index], profile, pts.reshape(-1, 3), R)[0]
    return float(vals[0]) if single else vals


def valid_basis_counts(max_radial: int = MAX_ROOTS, max_degree: int = L_MAX):
    return sorted({n * (L + 1) ** 2 for n in range(1, max_radial + 1) for L in range(max_degree + 1)})


def enumerate_bases(J: int, max_degree: int = None):
    """The first ``J`` basis indices, ordered by ``n``, then ``l``, then ``m``.

    Each radial mode contributes every ``(l, m)`` with ``l <= L``, so ``J``
    must equal ``N * (L + 1)**2``. Without ``max_degree`` the largest such
    ``L`` is chosen: ``J = 27`` gives three radial shells of the nine modes
    with ``l <= 2``.
    """
    J = int(J)
    if J < 1:
        raise InvalidArgument(f"basis count must be positive, got {J}")
    degrees = range(L_MAX, -1, -1) if max_degree is None else [int(max_degree)]
    for L in degrees:
        shell = (L + 1) ** 2
        if J % shell == 0 and 1 <= J // shell <= MAX_ROOTS and L <= L_MAX:
            N = J // shell
            return [
                BasisIndex(l, m, n)
                for n in range(1, N + 1)
                for l in range(L + 1)
                for m in range(-l, l + 1)
            ]
    valid = valid_basis_counts(max_degree=L_MAX if max_degree is None else int(max_degree))
    below = [v for v in valid if v < J][-1:]
    above = [v for v in valid if v > J][:1]
    raise InvalidArgument(
        f"basis count {J} is not a whole number of (l, m) shells; nearest valid counts: {below + above}"
    )


def _shift_tuple(shift):
    if shift is None:
        return (0, 0, 0)
    s = tuple(int(v) for v in np.asarray(shift).ravel())
    if len(s) != 3:
        raise InvalidArgument("shift must be an integer 3-vector")
    return s


def sample_bases(indices: Sequence[BasisIndex], profile, grid: KernelGrid, M_inv=None, shift=None, normalize=True):
    """Sample several bases with a shared transform; returns ``(J, k, k, k)``.

    Each voxel ``u`` gets ``basis(M_inv @ u)``; the grid is then rolled by
    ``shift`` (array-axis order) and optionally L2-normalized.
    """
    M_inv = np.eye(3) if M_inv is None else as_mat3(M_inv, "M_inv")
    if not np.linalg.det(M_inv) > 0:
        raise NotInGroup("sampling transform must have positive determinant")
    shift = _shift_tuple(shift)
    pts = grid.coords() @ M_inv.T
    vals = _eval_many(list(indices), profile, pts, grid.R).reshape(len(indices), grid.k, grid.k, grid.k)
    if any(shift):
        vals = np.roll(vals, shift, axis=(1, 2, 3))
    if normalize:
        norms = np.sqrt(np.einsum("jzyx,jzyx->j", vals, vals))
        bad = np.flatnonzero(norms == 0.0)
        if bad.size:
            raise DegenerateKernel(
                f"sampled basis {indices[bad[0]]} is identically zero under the applied transform"
            )
        vals = vals / norms[:, None, None, None]
    return vals


def sample_on_grid(index, profile, grid: KernelGrid, M_inv=None, shift=None, normalize=True) -> SampledKernel:
    if not isinstance(index, BasisIndex):
        index = BasisIndex(*index)
    M = np.eye(3) if M_inv is None else as_mat3(M_inv, "M_inv")
    vals = sample_bases([index], profile, grid, M, shift, normalize)[0]
    return SampledKernel(vals, index, M, _shift_tuple(shift))


def gram_matrix(bases, profile=None, R=None, resolution=256):
    """Pairwise inner products of a basis list.

    ``SampledKernel`` or array entries give voxel-sum inner products.
    ``BasisIndex`` entries are integrated over the ball of radius ``R`` with
    a product rule: composite Gauss-Legendre in r (``resolution`` nodes,
    rounded up to whole panels) times a sphere rule exact for the angular
    products.
    """
    bases = list(bases)
    if not bases:
        raise InvalidArgument("basis list is empty")
    if isinstance(bases[0], BasisIndex) or (isinstance(bases[0], tuple) and len(bases[0]) == 3 and not isinstance(bases[0], np.ndarray)):
        if profile is None or R is None:
            raise InvalidArgument("analytic Gram needs a profile and a radius")
        idx = [b if isinstance(b, BasisIndex) else BasisIndex(*b) for b in bases]
        return _analytic_gram(idx, profile, float(R), int(resolution))
    V = np.stack([np.asarray(b.values if isinstance(b, SampledKernel) else b, dtype=np.float64).ravel() for b in bases])
    G = V @ V.T
    return 0.5 * (G + G.T)


def _analytic_gram(indices, profile, R, resolution):
    order = 16
    panels = max(1, -(-resolution // order))
    r, wr = composite_gauss_legendre(0.0, R, panels, order)
    lmax = max(i.l for i in indices)
    theta, phi, wa = sphere_rule(lmax + 2, 2 * lmax + 4)
    radial = {}
    angular = {}
    for i in indices:
        if (i.l, i.n) not in radial:
            radial[(i.l, i.n)] = _radial(i.l, i.n, r, profile, R)
        if (i.l, i.m) not in angular:
            angular[(i.l, i.m)] = real_spherical_harmonic(i.l, i.m, theta, phi)
    # full tensor-product samples; weight includes the r^2 Jacobian
    F = np.stack([np.outer(radial[(i.l, i.n)], angular[(i.l, i.m)]).ravel() for i in indices])
    W = np.outer(wr * r * r, wa).ravel()
    G = (F * W) @ F.T
    return 0.5 * (G + G.T)
