"""Synthetic volumes, volume resampling and equivariance-error measurement."""

from __future__ import annotations

import enum
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .affine import TransformParams, as_mat3, compose_params
from .conv import as_tensor4d
from .errors import InvalidArgument, LayerContractViolation, NotInGroup
from .sampling import stream

__all__ = [
    "VolumeKind",
    "Interpolation",
    "OutOfRange",
    "TransformFamily",
    "VolumeTransformSpec",
    "TestRanges",
    "SampleRecord",
    "EquivarianceReport",
    "synth_volume",
    "resample_volume",
    "valid_region",
    "equivariance_error",
    "sample_family",
    "sweep_report",
    "thread_count",
    "bandlimit_filter",
]

THREADS_ENV = "WMCG3D_THREADS"
_EPS = 1e-30


class VolumeKind(enum.Enum):
    SmoothBlobs = "blobs"
    BandlimitedNoise = "noise"


class Interpolation(enum.Enum):
    Trilinear = "trilinear"
    NearestNeighbor = "nearest"


class OutOfRange(enum.Enum):
    ZeroFill = "zero"
    Wrap = "wrap"


class TransformFamily(enum.Enum):
    Identity = "identity"
    Rotation = "rotation"
    Scaling = "scaling"
    Shear = "shear"
    FullAffine = "affine"


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def synth_volume(kind, channels: int, size: int, seed: int, n_blobs: int = 8) -> np.ndarray:
    """Deterministic synthetic ``(channels, size, size, size)`` volume.

    ``SmoothBlobs`` sums random anisotropic Gaussian bumps with amplitudes in
    ``[-1, 1]``. ``BandlimitedNoise`` filters unit white noise with
    :func:`bandlimit_filter` (no content above a quarter of Nyquist) and
    rescales it to unit expected variance.
    """
    kind = VolumeKind(kind)
    size, channels = int(size), int(channels)
    if size < 16:
        raise InvalidArgument(f"volume size must be >= 16, got {size}")
    if channels < 1:
        raise InvalidArgument("channels must be positive")
    rng = stream(seed, 7001, kind is VolumeKind.BandlimitedNoise)
    if kind is VolumeKind.BandlimitedNoise:
        H = bandlimit_filter(size)
        scale = 1.0 / math.sqrt(np.mean(H ** 2))
        out = np.empty((channels, size, size, size))
        for c in range(channels):
            white = rng.standard_normal((size, size, size))
            out[c] = scale * np.fft.ifftn(np.fft.fftn(white) * H).real
        return out
    r = np.arange(size, dtype=np.float64)
    Z, Y, X = np.meshgrid(r, r, r, indexing="ij")
    pts = np.stack([X, Y, Z], axis=-1)
    out = np.zeros((channels, size, size, size))
    for c in range(channels):
        for _ in range(n_blobs):
            centre = rng.uniform(0.2 * size, 0.8 * size, 3)
            widths = rng.uniform(0.06 * size, 0.2 * size, 3)
            amp = rng.uniform(-1.0, 1.0)
            d = (pts - centre) / widths
            out[c] += amp * np.exp(-0.5 * np.einsum("...i,...i->...", d, d))
    return out


BAND_LIMIT = 0.125  # cycles per voxel: a quarter of Nyquist


def bandlimit_filter(size: int) -> np.ndarray:
    """Radial low-pass on the FFT grid: ``cos^2(pi f / (2 f_c))`` for
    ``f <= f_c = 0.125`` cycles/voxel and zero above.

    The smooth roll-off keeps most energy well below the cut, which is what
    keeps trilinear resampling error small.
    """
    f = np.fft.fftfreq(size)
    FZ, FY, FX = np.meshgrid(f, f, f, indexing="ij")
    r = np.sqrt(FX ** 2 + FY ** 2 + FZ ** 2)
    return np.where(r <= BAND_LIMIT, np.cos(0.5 * np.pi * r / BAND_LIMIT) ** 2, 0.0)


@dataclass(frozen=True)
class VolumeTransformSpec:
    """Spatial transform ``out(x) = in(M^-1 (x - c) + c)`` about ``center``
    (physical ``(x, y, z)``; ``None`` means the volume's geometric centre)."""

    M: np.ndarray
    interpolation: Interpolation = Interpolation.Trilinear
    out_of_range: OutOfRange = OutOfRange.ZeroFill
    center: tuple = None

    def __post_init__(self):
        M = as_mat3(self.M, "M")
        if not np.linalg.det(M) > 0:
            raise NotInGroup("volume transform must have positive determinant")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "interpolation", Interpolation(self.interpolation))
        object.__setattr__(self, "out_of_range", OutOfRange(self.out_of_range))


def _center(shape, center):
    D, H, W = shape
    if center is None:
        return np.array([(W - 1) / 2, (H - 1) / 2, (D - 1) / 2])
    return np.asarray(center, dtype=np.float64).reshape(3)


def _preimage(shape, M, center):
    """Source coordinates ``(3, D, H, W)`` in array-axis order ``(z, y, x)``."""
    cond = np.linalg.cond(M)
    if not cond < 1e12:
        raise InvalidArgument(f"transform is singular (condition {cond:.3e})")
    Minv = np.linalg.inv(M)
    c = _center(shape, center)
    D, H, W = shape
    Z, Y, X = np.meshgrid(np.arange(D, dtype=np.float64), np.arange(H, dtype=np.float64),
                          np.arange(W, dtype=np.float64), indexing="ij")
    p = np.stack([X - c[0], Y - c[1], Z - c[2]])
    q = np.einsum("ij,j...->i...", Minv, p) + c[:, None, None, None]
    # snap round-off so grid-preserving maps (quarter turns, identity) stay exact
    nearest = np.rint(q)
    q = np.where(np.abs(q - nearest) < 1e-9, nearest, q)
    return q[::-1]


def resample_volume(vol, spec: VolumeTransformSpec) -> np.ndarray:
    vol = as_tensor4d(vol, "volume")
    coords = _preimage(vol.shape[1:], spec.M, spec.center)
    order = 1 if spec.interpolation is Interpolation.Trilinear else 0
    mode = "constant" if spec.out_of_range is OutOfRange.ZeroFill else "grid-wrap"
    out = np.empty_like(vol)
    for c in range(vol.shape[0]):
        out[c] = ndimage.map_coordinates(vol[c], coords, order=order, mode=mode, cval=0.0, prefilter=False)
    return out


def valid_region(shape, M, half_width: int, center=None) -> np.ndarray:
    """Voxels where neither ``layer(T f)`` nor ``T layer(f)`` sees padding
    or out-of-field samples, for a layer of the given kernel half-width."""
    shape = tuple(shape)
    q = _preimage(shape, as_mat3(M), center)
    hi = np.array(shape, dtype=np.float64)[:, None, None, None] - 1.0
    in_field = np.all((q >= 0.0) & (q <= hi), axis=0)
    hw = int(half_width)
    if hw > 0:
        in_field = ndimage.binary_erosion(in_field, structure=np.ones((2 * hw + 1,) * 3), border_value=0)
    src_interior = np.all((np.floor(q) >= hw) & (np.ceil(q) <= hi - hw), axis=0)
    mask = in_field & src_interior
    if hw > 0:
        mask[:hw] = mask[-hw:] = False
        mask[:, :hw] = mask[:, -hw:] = False
        mask[:, :, :hw] = mask[:, :, -hw:] = False
    return mask


def equivariance_error(layer, vol, spec: VolumeTransformSpec, crop_margin: int, layer_transformed=None, mask=None):
    """Relative L2 and max-abs discrepancy between ``layer(T vol)`` and
    ``T layer(vol)`` over the interior crop (and ``mask`` if given).

    ``layer_transformed`` replaces ``layer`` on the transformed input; it is
    how a layer whose kernels were transformed alongside the input is
    compared against the original.
    """
    vol = as_tensor4d(vol, "volume")
    m = int(crop_margin)
    if m < 0:
        raise InvalidArgument("crop margin must be non-negative")
    layer_t = layer if layer_transformed is None else layer_transformed
    A = np.asarray(layer_t(resample_volume(vol, spec)), dtype=np.float64)
    out = np.asarray(layer(vol), dtype=np.float64)
    if out.ndim != 4 or out.shape[1:] != vol.shape[1:] or A.shape != out.shape:
        raise LayerContractViolation(
            f"layer must preserve spatial dims {vol.shape[1:]}, got {out.shape} and {A.shape}"
        )
    B = resample_volume(out, spec)
    sl = (slice(None),) + tuple(slice(m, s - m) for s in vol.shape[1:])
    diff = (A - B)[sl]
    ref = B[sl]
    if mask is not None:
        keep = np.asarray(mask, dtype=bool)[sl[1:]]
        diff = diff[:, keep]
        ref = ref[:, keep]
    if diff.size == 0:
        raise InvalidArgument("interior crop is empty")
    rel = float(np.linalg.norm(diff.ravel()) / max(float(np.linalg.norm(ref.ravel())), _EPS))
    return rel, float(np.max(np.abs(diff)))


@dataclass(frozen=True)
class TestRanges:
    """Transform ranges for equivariance sweeps (defaults: the affine test
    protocol with shear angles in ``(-pi/2, pi/2)``, scale ``[1, 2)`` and
    rotation angles in ``[-pi, pi)``)."""

    __test__ = False

    shear_angle_range: tuple = (-0.5 * math.pi, 0.5 * math.pi)
    scale_range: tuple = (1.0, 2.0)
    rotation_range: tuple = (-math.pi, math.pi)


def _open_uniform(rng, lo, hi, size):
    u = lo + (hi - lo) * rng.random(size)
    if hi > lo:
        u = np.clip(u, np.nextafter(lo, hi), np.nextafter(hi, lo))
    return u


def sample_family(family, ranges: TestRanges, rng) -> TransformParams:
    """Draw one transform of the family. Every family consumes the same
    variates so a given stream maps to comparable transforms."""
    family = TransformFamily(family)
    thetas = _open_uniform(rng, *ranges.rotation_range, 2)
    f = _open_uniform(rng, *ranges.scale_range, 1)[0]
    angles = _open_uniform(rng, *ranges.shear_angle_range, 6)
    zero = np.zeros(6)
    rot = family in (TransformFamily.Rotation, TransformFamily.FullAffine)
    scl = family in (TransformFamily.Scaling, TransformFamily.FullAffine)
    shr = family in (TransformFamily.Shear, TransformFamily.FullAffine)
    t1, t3 = thetas if rot else (0.0, 0.0)
    e = math.log2(f) if scl else 0.0
    s01, s10, s02, s20, s12, s21 = np.tan(angles) if shr else zero
    return TransformParams(t1, t3, e, e, e, s01, s10, s02, s20, s12, s21)


@dataclass(frozen=True)
class SampleRecord:
    family: str
    index: int
    seed: int
    params: tuple
    rel_l2: float
    max_abs: float
    crop: int
    valid_voxels: int


@dataclass(frozen=True)
class EquivarianceReport:
    family: str
    seed: int
    crop_margin: int
    records: tuple = field(default_factory=tuple)

    @property
    def n_samples(self) -> int:
        return len(self.records)

    @property
    def rel_l2(self) -> np.ndarray:
        return np.array([r.rel_l2 for r in self.records])

    @property
    def max_abs(self) -> np.ndarray:
        return np.array([r.max_abs for r in self.records])

    def summary(self) -> dict:
        rel, mx = self.rel_l2, self.max_abs
        return {
            "record": "summary",
            "family": self.family,
            "seed": self.seed,
            "crop": self.crop_margin,
            "n_samples": self.n_samples,
            "rel_l2_mean": float(rel.mean()),
            "rel_l2_std": float(rel.std()),
            "max_abs_mean": float(mx.mean()),
            "max_abs_std": float(mx.std()),
        }

    def to_lines(self) -> str:
        lines = []
        for r in self.records:
            lines.append(json.dumps({
                "record": "sample",
                "family": r.family,
                "index": r.index,
                "seed": r.seed,
                "params": list(r.params),
                "rel_l2": r.rel_l2,
                "max_abs": r.max_abs,
                "crop": r.crop,
                "valid_voxels": r.valid_voxels,
            }, sort_keys=True))
        lines.append(json.dumps(self.summary(), sort_keys=True))
        return "\n".join(lines) + "\n"


def sweep_report(layer_factory, family, n_samples: int, seed: int, *, ranges: TestRanges = None,
                 kernel_size: int = 5, size: int = 32, channels: int = 1,
                 kind=VolumeKind.BandlimitedNoise, interpolation=Interpolation.Trilinear,
                 out_of_range=OutOfRange.Wrap, min_valid: int = 512,
                 matched_factory=None) -> EquivarianceReport:
    """Equivariance errors of ``layer_factory(sample_seed)`` over random
    transforms of ``family`` applied to fresh synthetic volumes.

    With ``Wrap`` (the default) the volume is treated as periodic, which is
    exact for band-limited noise; layers should then use circular padding
    and errors are taken inside a crop of the kernel half-width. With
    ``ZeroFill`` errors are further restricted to :func:`valid_region`, and
    transforms leaving fewer than ``min_valid`` valid voxels are redrawn from
    the same sample stream. ``matched_factory(sample_seed, M)``, if given,
    supplies the layer applied to the transformed input.
    """
    n_samples = int(n_samples)
    if n_samples < 1:
        raise InvalidArgument("n_samples must be >= 1")
    family = TransformFamily(family)
    ranges = ranges or TestRanges()
    out_of_range = OutOfRange(out_of_range)
    hw = (int(kernel_size) - 1) // 2
    n_interior = max(size - 2 * hw, 0) ** 3

    def one(i):
        rng = stream(seed, 9001, i)
        sample_seed = int(rng.integers(0, 2 ** 63))
        mask = None
        for _ in range(1000):
            a = sample_family(family, ranges, rng)
            M = compose_params(a)
            if out_of_range is OutOfRange.Wrap or family is TransformFamily.Identity:
                break
            mask = valid_region((size,) * 3, M, hw)
            if int(mask.sum()) >= min_valid:
                break
        else:
            raise InvalidArgument(f"could not draw a transform with {min_valid} valid voxels")
        vol = synth_volume(kind, channels, size, sample_seed)
        layer = layer_factory(sample_seed)
        matched = None if matched_factory is None else matched_factory(sample_seed, M)
        spec = VolumeTransformSpec(M, interpolation, out_of_range)
        rel, mx = equivariance_error(layer, vol, spec, hw, layer_transformed=matched, mask=mask)
        valid = n_interior if mask is None else int(mask.sum())
        return SampleRecord(family.value, i, sample_seed, tuple(a.as_array().tolist()), rel, mx, hw, valid)

    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            records = tuple(pool.map(one, range(n_samples)))
    else:
        records = tuple(one(i) for i in range(n_samples))
    return EquivarianceReport(family.value, int(seed), hw, records)
