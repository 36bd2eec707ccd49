"""Algebra of GL+(3, R) and the 3D affine group.

Matrices are 3x3 float64 arrays acting on column vectors ``(x, y, z)``.
A linear map is parameterized by an 11-vector (two rotation angles, three
log2 scale exponents and six shears) and built as the ordered product

    M(a) = R1(theta1) R3(theta3) A1(alpha) A2(beta) A3(gamma)
           S20 S10 S21 S01 S12 S02
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import DegeneratePivot, IllConditioned, InvalidArgument, NotInGroup

__all__ = [
    "GeneratorKind",
    "TransformParams",
    "AffineElement",
    "generator_matrix",
    "compose_params",
    "decompose_gl3",
    "group_product",
    "group_inverse",
    "haar_coefficient",
    "PIVOT_RTOL",
]

PIVOT_RTOL = 1e-12
COND_LIMIT = 1e12


class GeneratorKind(enum.Enum):
    ScaleX = "ScaleX"
    ScaleY = "ScaleY"
    ScaleZ = "ScaleZ"
    RotX = "RotX"
    RotY = "RotY"
    RotZ = "RotZ"
    Shear01 = "Shear01"
    Shear02 = "Shear02"
    Shear12 = "Shear12"
    Shear10 = "Shear10"
    Shear20 = "Shear20"
    Shear21 = "Shear21"


_SHEAR_POS = {
    GeneratorKind.Shear01: (0, 1),
    GeneratorKind.Shear02: (0, 2),
    GeneratorKind.Shear12: (1, 2),
    GeneratorKind.Shear10: (1, 0),
    GeneratorKind.Shear20: (2, 0),
    GeneratorKind.Shear21: (2, 1),
}
_SCALE_AXIS = {GeneratorKind.ScaleX: 0, GeneratorKind.ScaleY: 1, GeneratorKind.ScaleZ: 2}


@dataclass(frozen=True)
class TransformParams:
    """Parameter vector of a GL+(3) element, in the order
    ``(theta1, theta3, alpha, beta, gamma, s01, s10, s02, s20, s12, s21)``.

    Angles are radians, ``alpha/beta/gamma`` are log2 scale exponents, and
    shears are raw off-diagonal matrix entries.
    """

    theta1: float = 0.0
    theta3: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    s01: float = 0.0
    s10: float = 0.0
    s02: float = 0.0
    s20: float = 0.0
    s12: float = 0.0
    s21: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = float(getattr(self, f.name))
            if not math.isfinite(v):
                raise InvalidArgument(f"TransformParams.{f.name} must be finite, got {v!r}")
            object.__setattr__(self, f.name, v)

    @classmethod
    def from_array(cls, values) -> "TransformParams":
        values = np.asarray(values, dtype=np.float64).ravel()
        if values.shape != (11,):
            raise InvalidArgument(f"expected 11 parameters, got {values.shape[0]}")
        return cls(*values.tolist())

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)

    @property
    def log2_scale_sum(self) -> float:
        return self.alpha + self.beta + self.gamma


def _check_finite(value: float, what: str = "value") -> float:
    value = float(value)
    if not math.isfinite(value):
        raise InvalidArgument(f"{what} must be finite, got {value!r}")
    return value


def generator_matrix(kind: GeneratorKind, value: float) -> np.ndarray:
    """Matrix of a single one-parameter generator.

    Scalings put ``2**value`` on the diagonal, rotations use the
    cos/sin pattern about the named axis and shears place ``value`` at the
    named off-diagonal position.
    """
    kind = GeneratorKind(kind)
    value = _check_finite(value)
    m = np.eye(3)
    if kind in _SCALE_AXIS:
        i = _SCALE_AXIS[kind]
        m[i, i] = 2.0 ** value
    elif kind in _SHEAR_POS:
        m[_SHEAR_POS[kind]] = value
    else:
        c, s = math.cos(value), math.sin(value)
        if kind is GeneratorKind.RotX:
            m[1, 1], m[1, 2], m[2, 1], m[2, 2] = c, -s, s, c
        elif kind is GeneratorKind.RotY:
            m[0, 0], m[0, 2], m[2, 0], m[2, 2] = c, -s, s, c
        else:
            m[0, 0], m[0, 1], m[1, 0], m[1, 1] = c, -s, s, c
    return m


def _chain(a: TransformParams):
    G = GeneratorKind
    return [
        (G.RotX, a.theta1),
        (G.RotZ, a.theta3),
        (G.ScaleX, a.alpha),
        (G.ScaleY, a.beta),
        (G.ScaleZ, a.gamma),
        (G.Shear20, a.s20),
        (G.Shear10, a.s10),
        (G.Shear21, a.s21),
        (G.Shear01, a.s01),
        (G.Shear12, a.s12),
        (G.Shear02, a.s02),
    ]


def compose_params(a: TransformParams) -> np.ndarray:
    """Build ``M(a)`` as the left-to-right product of the eleven generators."""
    m = np.eye(3)
    for kind, value in _chain(a):
        m = m @ generator_matrix(kind, value)
    return m


def as_mat3(Y, what: str = "matrix") -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    if Y.shape != (3, 3):
        Y = Y.reshape(-1)
        if Y.shape != (9,):
            raise InvalidArgument(f"{what} must have 9 entries, got {Y.size}")
        Y = Y.reshape(3, 3)
    if not np.all(np.isfinite(Y)):
        raise InvalidArgument(f"{what} has non-finite entries")
    return Y


# (entry eliminated, pivot row) in application order, innermost shear first.
_ELIMINATION = [
    ("s02", (0, 2), 2),
    ("s12", (1, 2), 2),
    ("s01", (0, 1), 1),
    ("s21", (2, 1), 1),
    ("s10", (1, 0), 0),
    ("s20", (2, 0), 0),
]


def decompose_gl3(Y, pivot_rtol: float = PIVOT_RTOL) -> TransformParams:
    """Find parameters ``a`` with ``compose_params(a) == Y``.

    The inverse ``Z = Y^-1`` is reduced to a diagonal matrix ``D`` by
    left-multiplying shears ``S02, S12, S01, S21, S10, S20`` (row operations
    that clear one off-diagonal entry each). Since
    ``S20 S10 S21 S01 S12 S02 Z = A3(-g) A2(-b) A1(-a) R3(-t3) R1(-t1)``, the
    magnitudes of ``D`` give the scale exponents and its sign pattern
    selects half-turns about x and/or z.

    Raises
    ------
    NotInGroup
        If ``det(Y) <= 0``.
    DegeneratePivot
        If an elimination pivot is below ``pivot_rtol * max|Z|``.
    """
    Y = as_mat3(Y)
    det = float(np.linalg.det(Y))
    if not det > 0.0:
        raise NotInGroup(f"det(Y) = {det:.6g} is not positive")
    Z = np.linalg.inv(Y)
    tol = pivot_rtol * float(np.max(np.abs(Z)))
    shears = {}
    for name, (row, col), prow in _ELIMINATION:
        pivot = Z[prow, prow]
        if abs(pivot) < tol:
            raise DegeneratePivot(f"({row},{col})", pivot, tol)
        s = -Z[row, col] / pivot
        Z[row] = Z[row] + s * Z[prow]
        Z[row, col] = 0.0
        shears[name] = s

    a, b, c = Z[0, 0], Z[1, 1], Z[2, 2]
    # R1(pi) = diag(1,-1,-1), R3(pi) = diag(-1,-1,1)
    signs = (a > 0, b > 0, c > 0)
    if signs == (True, True, True):
        theta1, theta3 = 0.0, 0.0
    elif signs == (True, False, False):
        theta1, theta3 = math.pi, 0.0
    elif signs == (False, False, True):
        theta1, theta3 = 0.0, math.pi
    elif signs == (False, True, False):
        theta1, theta3 = math.pi, math.pi
    else:  # pragma: no cover - excluded by det > 0
        raise NotInGroup(f"residual diagonal {(a, b, c)} has non-positive product")
    return TransformParams(
        theta1=theta1,
        theta3=theta3,
        alpha=-math.log2(abs(a)),
        beta=-math.log2(abs(b)),
        gamma=-math.log2(abs(c)),
        **shears,
    )


@dataclass(frozen=True)
class AffineElement:
    """Group element ``(x, M)`` acting as ``u -> M u + x``."""

    x: np.ndarray
    M: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64).reshape(3)
        M = as_mat3(self.M, "M").copy()
        if not np.all(np.isfinite(x)):
            raise InvalidArgument("translation has non-finite entries")
        if not np.linalg.det(M) > 0:
            raise NotInGroup("linear part must have positive determinant")
        x.flags.writeable = False
        M.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "M", M)

    @classmethod
    def identity(cls) -> "AffineElement":
        return cls(np.zeros(3), np.eye(3))

    @classmethod
    def from_params(cls, x, a: TransformParams) -> "AffineElement":
        return cls(x, compose_params(a))

    def act(self, u) -> np.ndarray:
        return self.M @ np.asarray(u, dtype=np.float64) + self.x


def group_product(g1: AffineElement, g2: AffineElement) -> AffineElement:
    return AffineElement(g1.M @ g2.x + g1.x, g1.M @ g2.M)


def group_inverse(g: AffineElement) -> AffineElement:
    cond = np.linalg.cond(g.M)
    if not cond < COND_LIMIT:
        raise IllConditioned(f"condition number {cond:.3e} exceeds {COND_LIMIT:.0e}")
    Minv = np.linalg.inv(g.M)
    return AffineElement(-(Minv @ g.x), Minv)


def haar_coefficient(b: TransformParams) -> float:
    """Haar normalization ``2**(-2 (alpha + beta + gamma))`` of a sample."""
    return 2.0 ** (-2.0 * b.alpha - 2.0 * b.beta - 2.0 * b.gamma)
