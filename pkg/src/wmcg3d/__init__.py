"""Weighted Monte-Carlo augmented group convolution for 3D volumes.

Filter bases (spherical Fourier-Bessel or Gaussian-shell radial profiles
times real spherical harmonics) are sampled under random affine transforms
drawn per channel pair, weighted, and summed into an ordinary convolution
kernel bank.
"""

from .affine import (
    AffineElement,
    TransformParams,
    compose_params,
    decompose_gl3,
    group_inverse,
    group_product,
    haar_coefficient,
)
from .basis import (
    BasisIndex,
    GaussianShell,
    KernelGrid,
    SphericalBessel,
    enumerate_bases,
    eval_basis,
    gram_matrix,
    sample_on_grid,
)
from .conv import KernelBank, PaddingMode, WMCGLayer, build_kernel_bank, conv3d, grad_weights, scalar_conv, wmcg_forward
from .errors import WMCGError
from .sampling import AugmentationConfig, LayerSamplingPlan, build_layer_plan

__version__ = "0.1.0"
