"""Kernel-bank synthesis and direct 3D convolution.

Feature maps are ``(C, D, H, W)`` float64 arrays. Kernels are
``(C_o, C_i, k, k, k)`` banks and the sliding operation is a stride-1,
same-size correlation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .affine import compose_params
from .basis import KernelGrid, sample_bases
from .errors import InvalidArgument
from .sampling import LayerSamplingPlan

__all__ = [
    "PaddingMode",
    "KernelBank",
    "as_tensor4d",
    "pair_transform",
    "plan_bases",
    "build_kernel_bank",
    "conv3d",
    "conv3d_weight_grad",
    "scalar_conv",
    "wmcg_forward",
    "grad_weights",
    "WMCGLayer",
]


class PaddingMode(enum.Enum):
    Zero = "zero"
    Circular = "circular"


@dataclass(frozen=True)
class KernelBank:
    values: np.ndarray
    normalized: bool = True
    haar_applied: bool = True

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 5 or not (v.shape[2] == v.shape[3] == v.shape[4]) or v.shape[2] % 2 == 0:
            raise InvalidArgument(f"kernel bank must be (C_o, C_i, k, k, k) with odd k, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidArgument("kernel bank has non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape

    @property
    def kernel_size(self) -> int:
        return self.values.shape[2]


def as_tensor4d(x, what="input") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4 or min(x.shape) < 1:
        raise InvalidArgument(f"{what} must be a (C, D, H, W) array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidArgument(f"{what} has non-finite values")
    return x


def _bank_values(bank) -> np.ndarray:
    if isinstance(bank, KernelBank):
        return bank.values
    return KernelBank(bank).values


def pair_transform(plan: LayerSamplingPlan, o: int, i: int) -> np.ndarray:
    """Sampling transform ``M(a_o)^-1 M(b_oi) frame^-1`` for one channel pair."""
    Ma = compose_params(plan.a_samples[o])
    Mb = compose_params(plan.b_samples[o][i])
    T = np.linalg.solve(Ma, Mb)
    if not np.array_equal(plan.frame, np.eye(3)):
        T = T @ np.linalg.inv(plan.frame)
    return T


def plan_bases(plan: LayerSamplingPlan, basis_indices, profile, grid: KernelGrid, normalize=True) -> np.ndarray:
    """Transformed, shifted bases for every channel pair: ``(C_o, C_i, J, k, k, k)``."""
    if grid.k != plan.kernel_size:
        raise InvalidArgument(f"grid size {grid.k} does not match plan kernel size {plan.kernel_size}")
    indices = list(basis_indices)
    out = np.empty((plan.c_out, plan.c_in, len(indices), grid.k, grid.k, grid.k))
    for o in range(plan.c_out):
        for i in range(plan.c_in):
            out[o, i] = sample_bases(indices, profile, grid, pair_transform(plan, o, i), plan.shifts[o, i], normalize)
    return out


def _check_weights(weights, plan, n_bases):
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (plan.c_out, plan.c_in, n_bases):
        raise InvalidArgument(
            f"weights shape {w.shape} does not match (C_o, C_i, J) = {(plan.c_out, plan.c_in, n_bases)}"
        )
    if not np.all(np.isfinite(w)):
        raise InvalidArgument("weights have non-finite values")
    return w


def build_kernel_bank(weights, basis_indices, profile, grid: KernelGrid, plan: LayerSamplingPlan,
                      normalize=True, bases=None) -> KernelBank:
    """Haar-weighted sum of transformed bases per channel pair.

    ``kernel[o, i] = C(b_oi) * sum_j w[o, i, j] * basis_j sampled at
    M(a_o)^-1 M(b_oi) u`` and rolled by the pair's shift. Precomputed
    ``bases`` from :func:`plan_bases` may be passed to skip resampling.
    """
    indices = list(basis_indices)
    w = _check_weights(weights, plan, len(indices))
    if bases is None:
        bases = plan_bases(plan, indices, profile, grid, normalize)
    summed = np.einsum("oij,oijzyx->oizyx", w, bases)
    return KernelBank(plan.haar[:, :, None, None, None] * summed, normalized=normalize, haar_applied=True)


def _pad(x, h, padding):
    padding = PaddingMode(padding)
    width = ((0, 0), (h, h), (h, h), (h, h))
    if padding is PaddingMode.Zero:
        return np.pad(x, width, mode="constant")
    return np.pad(x, width, mode="wrap")


def conv3d(x, bank, padding=PaddingMode.Zero) -> np.ndarray:
    """Stride-1 same-size correlation.

    ``out[o, p] = sum_i sum_d K[o, i, d] * x_pad[i, p + d]``, accumulated
    over kernel offsets in a fixed order.
    """
    x = as_tensor4d(x)
    K = _bank_values(bank)
    c_out, c_in, k = K.shape[0], K.shape[1], K.shape[2]
    if x.shape[0] != c_in:
        raise InvalidArgument(f"input has {x.shape[0]} channels, bank expects {c_in}")
    if min(x.shape[1:]) < k:
        raise InvalidArgument(f"spatial dims {x.shape[1:]} smaller than kernel size {k}")
    h = (k - 1) // 2
    xp = _pad(x, h, padding)
    D, H, W = x.shape[1:]
    out = np.zeros((c_out, D, H, W))
    flat = out.reshape(c_out, -1)
    for dz in range(k):
        for dy in range(k):
            for dx in range(k):
                window = np.ascontiguousarray(xp[:, dz:dz + D, dy:dy + H, dx:dx + W]).reshape(c_in, -1)
                flat += K[:, :, dz, dy, dx] @ window
    return out


def conv3d_weight_grad(x, grad_out, k, padding=PaddingMode.Zero) -> np.ndarray:
    """Gradient of ``<grad_out, conv3d(x, K)>`` with respect to ``K``."""
    x = as_tensor4d(x)
    g = as_tensor4d(grad_out, "grad_output")
    if g.shape[1:] != x.shape[1:]:
        raise InvalidArgument(f"grad_output spatial shape {g.shape[1:]} differs from input {x.shape[1:]}")
    h = (k - 1) // 2
    xp = _pad(x, h, padding)
    D, H, W = x.shape[1:]
    gflat = g.reshape(g.shape[0], -1)
    out = np.empty((g.shape[0], x.shape[0], k, k, k))
    for dz in range(k):
        for dy in range(k):
            for dx in range(k):
                window = np.ascontiguousarray(xp[:, dz:dz + D, dy:dy + H, dx:dx + W]).reshape(x.shape[0], -1)
                out[:, :, dz, dy, dx] = gflat @ window.T
    return out


def scalar_conv(x, weights) -> np.ndarray:
    """1x1x1 convolution: per-voxel channel mixing by a ``(C_o, C_i)`` matrix."""
    x = as_tensor4d(x)
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 2 or w.shape[1] != x.shape[0]:
        raise InvalidArgument(f"weights shape {w.shape} incompatible with {x.shape[0]} input channels")
    return (w @ x.reshape(x.shape[0], -1)).reshape((w.shape[0],) + x.shape[1:])


def wmcg_forward(x, weights, plan, basis_indices, profile, grid, padding=PaddingMode.Zero, normalize=True):
    bank = build_kernel_bank(weights, basis_indices, profile, grid, plan, normalize)
    return conv3d(x, bank, padding)


def grad_weights(x, grad_out, plan, basis_indices, profile, grid, padding=PaddingMode.Zero,
                 normalize=True, bases=None) -> np.ndarray:
    """Exact gradient of ``<grad_out, wmcg_forward(x, w, ...)>`` in ``w``.

    The layer is linear in ``w``: the kernel gradient is projected onto
    each pair's sampled bases and scaled by the Haar coefficient.
    """
    x = as_tensor4d(x)
    g = as_tensor4d(grad_out, "grad_output")
    if g.shape != (plan.c_out,) + x.shape[1:]:
        raise InvalidArgument(f"grad_output shape {g.shape} does not match forward output {(plan.c_out,) + x.shape[1:]}")
    if x.shape[0] != plan.c_in:
        raise InvalidArgument(f"input has {x.shape[0]} channels, plan expects {plan.c_in}")
    if bases is None:
        bases = plan_bases(plan, basis_indices, profile, grid, normalize)
    gk = conv3d_weight_grad(x, g, grid.k, padding)
    return plan.haar[:, :, None] * np.einsum("oizyx,oijzyx->oij", gk, bases)


class WMCGLayer:
    """A single WMCG layer with its kernel bank precomputed.

    Calling the layer is a plain :func:`conv3d` with the stored bank, so its
    cost is that of a standard convolution of the same shape.
    """

    def __init__(self, weights, plan, basis_indices, profile, grid, padding=PaddingMode.Zero, normalize=True):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.plan = plan
        self.basis_indices = list(basis_indices)
        self.profile = profile
        self.grid = grid
        self.padding = PaddingMode(padding)
        self.normalize = normalize
        self.bank = build_kernel_bank(self.weights, self.basis_indices, profile, grid, plan, normalize)

    def __call__(self, x):
        return conv3d(x, self.bank, self.padding)

    def transformed(self, R) -> "WMCGLayer":
        """Same weights, every kernel transformed by ``R`` (see
        :meth:`LayerSamplingPlan.transformed`)."""
        return WMCGLayer(self.weights, self.plan.transformed(R), self.basis_indices, self.profile,
                         self.grid, self.padding, self.normalize)
