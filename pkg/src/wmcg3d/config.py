"""YAML run configuration for the command-line tools.

Every section and key is optional; omitted values take the defaults of the
``sFB-k5-nb27-shear0.25pi`` setting. Unknown keys and out-of-range values are
rejected with a :class:`ConfigError` naming the key (and its line, when the
configuration came from text).

Angles may be written in radians or as strings such as ``"0.25pi"``.
"""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, field, fields, replace

import yaml

from .bessel import L_MAX
from .basis import GaussianShell, KernelGrid, SphericalBessel, enumerate_bases
from .conv import PaddingMode
from .equivariance import Interpolation, OutOfRange, TransformFamily, VolumeKind
from .errors import ConfigError, WMCGError
from .sampling import AugmentationConfig

__all__ = ["RunConfig", "parse_config", "load_config", "dump_config"]

_PI_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)?\s*\*?\s*pi\s*$")


@dataclass(frozen=True)
class AugmentationSection:
    shear_angle_range: tuple = (-0.25 * math.pi, 0.25 * math.pi)
    scale_factor_range: tuple = (1.0, 2.0)
    isotropic_scaling: bool = True
    rotation_enabled: bool = True
    shift_enabled: bool = True


@dataclass(frozen=True)
class GridSection:
    kernel_size: int = 5
    radius: float = None


@dataclass(frozen=True)
class BasisSection:
    count: int = 27
    max_degree: int = None
    profile: str = "sfb"
    sigma: float = 0.5
    normalize: bool = True


@dataclass(frozen=True)
class LayerSection:
    c_out: int = 4
    c_in: int = 4
    layer_id: int = 0
    padding: str = "zero"
    weights: str = None


@dataclass(frozen=True)
class EquivSection:
    family: str = "affine"
    n_samples: int = 20
    size: int = 32
    channels: int = 1
    volume: str = "noise"
    interpolation: str = "trilinear"
    out_of_range: str = "wrap"
    layer: str = "wmcg"
    shear_angle_range: tuple = (-0.5 * math.pi, 0.5 * math.pi)
    scale_range: tuple = (1.0, 2.0)
    rotation_range: tuple = (-math.pi, math.pi)


@dataclass(frozen=True)
class BenchSection:
    repeats: int = 5
    size: int = 32
    tolerance: float = 0.05


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    augmentation: AugmentationSection = field(default_factory=AugmentationSection)
    grid: GridSection = field(default_factory=GridSection)
    basis: BasisSection = field(default_factory=BasisSection)
    layer: LayerSection = field(default_factory=LayerSection)
    equiv: EquivSection = field(default_factory=EquivSection)
    bench: BenchSection = field(default_factory=BenchSection)

    def augmentation_config(self) -> AugmentationConfig:
        a = self.augmentation
        return AugmentationConfig(a.shear_angle_range, a.scale_factor_range, a.isotropic_scaling,
                                  a.rotation_enabled, a.shift_enabled, self.seed)

    def kernel_grid(self) -> KernelGrid:
        return KernelGrid(self.grid.kernel_size, self.grid.radius)

    def radial_profile(self):
        if self.basis.profile == "sfb":
            return SphericalBessel()
        return GaussianShell(self.basis.sigma)

    def basis_indices(self):
        return enumerate_bases(self.basis.count, self.basis.max_degree)

    def padding(self) -> PaddingMode:
        return PaddingMode(self.layer.padding)

    def with_seed(self, seed) -> "RunConfig":
        cfg = replace(self, seed=_seed(seed, "seed"))
        validate(cfg)
        return cfg


_SECTIONS = {
    "augmentation": AugmentationSection,
    "grid": GridSection,
    "basis": BasisSection,
    "layer": LayerSection,
    "equiv": EquivSection,
    "bench": BenchSection,
}

_ANGLE_KEYS = {"shear_angle_range", "rotation_range"}
_RANGE_KEYS = {"shear_angle_range", "scale_factor_range", "scale_range", "rotation_range"}


def _seed(value, key):
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < 2 ** 64:
        raise ConfigError(key, f"must be an unsigned 64-bit integer, got {value!r}")
    return value


def _angle(value, key):
    if isinstance(value, str):
        m = _PI_RE.match(value)
        if not m:
            raise ConfigError(key, f"cannot read angle {value!r}; use radians or e.g. '0.25pi'")
        return (float(m.group(1)) if m.group(1) else 1.0) * math.pi
    return _real(value, key)


def _real(value, key):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(key, f"must be a finite number, got {value!r}")
    return float(value)


def _int(value, key, lo=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(key, f"must be an integer, got {value!r}")
    if lo is not None and value < lo:
        raise ConfigError(key, f"must be >= {lo}, got {value}")
    return value


def _bool(value, key):
    if not isinstance(value, bool):
        raise ConfigError(key, f"must be true or false, got {value!r}")
    return value


def _choice(value, key, options):
    if value not in options:
        raise ConfigError(key, f"must be one of {sorted(options)}, got {value!r}")
    return value


def _coerce(name, value, key, default):
    if name in _RANGE_KEYS:
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            raise ConfigError(key, f"must be a two-element list, got {value!r}")
        conv = _angle if name in _ANGLE_KEYS else _real
        return tuple(conv(v, key) for v in value)
    if value is None:
        if default is None:
            return None
        raise ConfigError(key, "must not be empty")
    if isinstance(default, bool):
        return _bool(value, key)
    if name in ("radius", "sigma", "tolerance"):
        return _real(value, key)
    if name in ("weights",):
        if not isinstance(value, str):
            raise ConfigError(key, f"must be a file path, got {value!r}")
        return value
    if isinstance(default, int) or name in ("max_degree",):
        return _int(value, key)
    return value


def validate(cfg: RunConfig):
    """Check ranges and cross-field constraints; raises :class:`ConfigError`."""
    a = cfg.augmentation
    checks = [
        ("augmentation.shear_angle_range", lambda: AugmentationConfig(shear_angle_range=a.shear_angle_range)),
        ("augmentation.scale_factor_range", lambda: AugmentationConfig(scale_factor_range=a.scale_factor_range)),
        ("grid.kernel_size", lambda: KernelGrid(cfg.grid.kernel_size)),
        ("grid.radius", cfg.kernel_grid),
        ("basis.count", cfg.basis_indices),
        ("basis.sigma", cfg.radial_profile),
    ]
    md = cfg.basis.max_degree
    if md is not None and not 0 <= md <= L_MAX:
        raise ConfigError("basis.max_degree", f"must lie in [0, {L_MAX}], got {md}")
    for key, fn in checks:
        try:
            fn()
        except WMCGError as exc:
            raise ConfigError(key, str(exc)) from None
    _choice(cfg.basis.profile, "basis.profile", {"sfb", "gaussian"})
    _choice(cfg.layer.padding, "layer.padding", {p.value for p in PaddingMode})
    _int(cfg.layer.c_out, "layer.c_out", 1)
    _int(cfg.layer.c_in, "layer.c_in", 1)
    _int(cfg.layer.layer_id, "layer.layer_id", 0)
    e = cfg.equiv
    _choice(e.family, "equiv.family", {f.value for f in TransformFamily})
    _choice(e.volume, "equiv.volume", {v.value for v in VolumeKind})
    _choice(e.interpolation, "equiv.interpolation", {v.value for v in Interpolation})
    _choice(e.out_of_range, "equiv.out_of_range", {v.value for v in OutOfRange})
    _choice(e.layer, "equiv.layer", {"wmcg", "standard"})
    _int(e.n_samples, "equiv.n_samples", 1)
    _int(e.size, "equiv.size", 16)
    _int(e.channels, "equiv.channels", 1)
    lo, hi = e.shear_angle_range
    if not -math.pi / 2 <= lo <= hi <= math.pi / 2:
        raise ConfigError("equiv.shear_angle_range", "must satisfy -pi/2 <= lo <= hi <= pi/2")
    lo, hi = e.scale_range
    if not 0 < lo <= hi:
        raise ConfigError("equiv.scale_range", "must satisfy 0 < lo <= hi")
    lo, hi = e.rotation_range
    if not lo <= hi:
        raise ConfigError("equiv.rotation_range", "must satisfy lo <= hi")
    _int(cfg.bench.repeats, "bench.repeats", 3)
    _int(cfg.bench.size, "bench.size", cfg.grid.kernel_size)
    if not 0 < cfg.bench.tolerance < 1:
        raise ConfigError("bench.tolerance", "must lie in (0, 1)")
    _seed(cfg.seed, "seed")


def _lines(node, prefix=""):
    """Map dotted key paths to 1-based line numbers in a composed YAML tree."""
    out = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = f"{prefix}{k.value}"
            out[path] = k.start_mark.line + 1
            out.update(_lines(v, path + "."))
    return out


def _from_mapping(data, lines) -> RunConfig:
    def err(key, msg):
        line = lines.get(key)
        return ConfigError(key if line is None else f"{key} (line {line})", msg)

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("<root>", "configuration must be a mapping")
    top = {}
    for key, value in data.items():
        if key == "seed":
            try:
                top["seed"] = _seed(value, key)
            except ConfigError as exc:
                raise err(key, exc.message) from None
            continue
        if key not in _SECTIONS:
            raise err(str(key), "unknown key")
        cls = _SECTIONS[key]
        if value is None:
            value = {}
        if not isinstance(value, dict):
            raise err(key, "section must be a mapping")
        defaults = {f.name: f.default for f in fields(cls)}
        kwargs = {}
        for name, v in value.items():
            path = f"{key}.{name}"
            if name not in defaults:
                raise err(path, "unknown key")
            try:
                kwargs[name] = _coerce(name, v, path, defaults[name])
            except ConfigError as exc:
                raise err(path, exc.message) from None
        top[key] = cls(**kwargs)
    cfg = RunConfig(**top)
    try:
        validate(cfg)
    except ConfigError as exc:
        raise err(exc.key, exc.message) from None
    return cfg


def parse_config(text: str) -> RunConfig:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<syntax>", str(exc)) from None
    return _from_mapping(data, _lines(node) if node is not None else {})


def load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def dump_config(cfg: RunConfig) -> str:
    """YAML text that :func:`parse_config` reads back to an equal config."""
    data = asdict(cfg)
    for section in data.values():
        if isinstance(section, dict):
            for k, v in section.items():
                if isinstance(v, tuple):
                    section[k] = list(v)
    return yaml.safe_dump(data, sort_keys=False)
