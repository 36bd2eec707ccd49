"""Reproducible Monte-Carlo sampling of transformation parameters.

Every random stream is keyed by ``(seed, layer_id, c_o[, c_i])`` through
``numpy.random.SeedSequence`` spawn keys, so a plan does not depend on the
order in which its entries are generated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .affine import TransformParams, haar_coefficient
from .errors import InvalidArgument

__all__ = [
    "AugmentationConfig",
    "LayerSamplingPlan",
    "stream",
    "sample_params",
    "build_layer_plan",
    "plan_table",
]

_A_STREAM = 0
_B_STREAM = 1


@dataclass(frozen=True)
class AugmentationConfig:
    """Sampling ranges for filter augmentation.

    Defaults follow the ``sFB-k5-nb27-shear0.25pi`` setting: shear angles in
    ``[-pi/4, pi/4)``, isotropic scale factors in ``[1, 2)``, random
    rotations and random circular shifts.
    """

    shear_angle_range: tuple = (-0.25 * math.pi, 0.25 * math.pi)
    scale_factor_range: tuple = (1.0, 2.0)
    isotropic_scaling: bool = True
    rotation_enabled: bool = True
    shift_enabled: bool = True
    seed: int = 0

    def __post_init__(self):
        lo, hi = (float(v) for v in self.shear_angle_range)
        if not (-math.pi / 2 < lo <= hi < math.pi / 2):
            raise InvalidArgument(f"shear_angle_range must lie inside (-pi/2, pi/2) with lo <= hi, got {(lo, hi)}")
        slo, shi = (float(v) for v in self.scale_factor_range)
        if not (0 < slo <= shi < math.inf):
            raise InvalidArgument(f"scale_factor_range must satisfy 0 < lo <= hi, got {(slo, shi)}")
        seed = int(self.seed)
        if not 0 <= seed < 2 ** 64:
            raise InvalidArgument(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        object.__setattr__(self, "shear_angle_range", (lo, hi))
        object.__setattr__(self, "scale_factor_range", (slo, shi))
        object.__setattr__(self, "isotropic_scaling", bool(self.isotropic_scaling))
        object.__setattr__(self, "rotation_enabled", bool(self.rotation_enabled))
        object.__setattr__(self, "shift_enabled", bool(self.shift_enabled))
        object.__setattr__(self, "seed", seed)

    @classmethod
    def identity(cls, seed=0) -> "AugmentationConfig":
        return cls((0.0, 0.0), (1.0, 1.0), True, False, False, seed)


def stream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator addressed by ``seed`` and an integer path."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def _uniform(rng, lo, hi, size=None):
    # a degenerate interval yields its endpoint exactly
    u = rng.random(size)
    out = lo + (hi - lo) * u
    if hi > lo:
        # rounding must not reach the open upper end
        out = np.minimum(out, np.nextafter(hi, lo))
    return out


def sample_params(config: AugmentationConfig, rng: np.random.Generator) -> TransformParams:
    """Draw one parameter vector.

    The same number of variates is consumed whatever the flags are, so
    toggling one augmentation leaves the other draws unchanged.
    """
    thetas = _uniform(rng, -math.pi, math.pi, 2)
    factors = _uniform(rng, *config.scale_factor_range, 3)
    angles = _uniform(rng, *config.shear_angle_range, 6)
    if not config.rotation_enabled:
        thetas = np.zeros(2)
    exps = np.log2(factors)
    if config.isotropic_scaling:
        exps = np.full(3, exps[0])
    s01, s10, s02, s20, s12, s21 = np.tan(angles)
    return TransformParams(
        theta1=thetas[0],
        theta3=thetas[1],
        alpha=exps[0],
        beta=exps[1],
        gamma=exps[2],
        s01=s01,
        s10=s10,
        s02=s02,
        s20=s20,
        s12=s12,
        s21=s21,
    )


@dataclass(frozen=True)
class LayerSamplingPlan:
    """Per-layer Monte-Carlo draw: one ``a`` per output channel, one ``b``
    and one circular shift per channel pair.

    ``frame`` is an extra linear map applied to every kernel of the layer
    (identity for a freshly built plan); see :meth:`transformed`.
    Shifts are stored in array-axis order ``(z, y, x)``.
    """

    c_out: int
    c_in: int
    kernel_size: int
    a_samples: tuple
    b_samples: tuple
    shifts: np.ndarray
    haar: np.ndarray
    layer_id: int = 0
    seed: int = 0
    frame: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        if len(self.a_samples) != self.c_out or len(self.b_samples) != self.c_out:
            raise InvalidArgument("plan sample counts do not match c_out")
        if any(len(row) != self.c_in for row in self.b_samples):
            raise InvalidArgument("plan b-samples do not match c_in")
        if self.shifts.shape != (self.c_out, self.c_in, 3) or self.haar.shape != (self.c_out, self.c_in):
            raise InvalidArgument("plan shift/haar arrays have inconsistent shapes")

    def transformed(self, R) -> "LayerSamplingPlan":
        """Plan whose kernels are those of ``self`` transformed by ``R``.

        Kernel ``K`` becomes ``K(R^-1 u)``: sampling coordinates pick up
        ``R^-1`` and circular shifts are mapped by ``R`` (rounded, modulo k),
        which is exact for signed-permutation ``R``.
        """
        R = np.asarray(R, dtype=np.float64)
        k = self.kernel_size
        xyz = self.shifts[..., ::-1].astype(np.float64)
        rotated = np.rint(xyz @ R.T).astype(np.int64)[..., ::-1] % k
        return replace(self, shifts=rotated, frame=R @ self.frame)


def build_layer_plan(config: AugmentationConfig, c_out: int, c_in: int, kernel_size: int, layer_id: int = 0) -> LayerSamplingPlan:
    c_out, c_in, kernel_size = int(c_out), int(c_in), int(kernel_size)
    if c_out < 1 or c_in < 1 or kernel_size < 1:
        raise InvalidArgument("plan dimensions must be positive")
    a = tuple(sample_params(config, stream(config.seed, layer_id, _A_STREAM, o)) for o in range(c_out))
    b_rows = []
    shifts = np.zeros((c_out, c_in, 3), dtype=np.int64)
    haar = np.empty((c_out, c_in))
    for o in range(c_out):
        row = []
        for i in range(c_in):
            rng = stream(config.seed, layer_id, _B_STREAM, o, i)
            b = sample_params(config, rng)
            s = rng.integers(0, kernel_size, size=3)
            if config.shift_enabled:
                shifts[o, i] = s
            haar[o, i] = haar_coefficient(b)
            row.append(b)
        b_rows.append(tuple(row))
    return LayerSamplingPlan(c_out, c_in, kernel_size, a, tuple(b_rows), shifts, haar, int(layer_id), config.seed)


_PARAM_NAMES = ("theta1", "theta3", "alpha", "beta", "gamma", "s01", "s10", "s02", "s20", "s12", "s21")


def plan_table(plan: LayerSamplingPlan) -> str:
    """Tab-separated audit table of a plan, one row per sample."""
    head = ["kind", "c_o", "c_i", *_PARAM_NAMES, "shift_z", "shift_y", "shift_x", "haar"]
    lines = ["\t".join(head)]
    for o, a in enumerate(plan.a_samples):
        lines.append("\t".join(["a", str(o), "-", *(f"{v:.17g}" for v in a.as_array()), "-", "-", "-", "-"]))
    for o in range(plan.c_out):
        for i in range(plan.c_in):
            b = plan.b_samples[o][i]
            lines.append(
                "\t".join(
                    ["b", str(o), str(i), *(f"{v:.17g}" for v in b.as_array()),
                     *(str(int(s)) for s in plan.shifts[o, i]), f"{plan.haar[o, i]:.17g}"]
                )
            )
    return "\n".join(lines) + "\n"
