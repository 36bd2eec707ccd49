"""Command-line interface.

Exit codes: 0 success, 1 a check or tolerance failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import statistics
import sys
import time

import numpy as np

from . import bankio
from .affine import compose_params, decompose_gl3
from .basis import gram_matrix, sample_bases
from .bessel import bessel_boundary_roots
from .checks import Suite, run_suite
from .config import load_config
from .conv import KernelBank, PaddingMode, WMCGLayer, build_kernel_bank, conv3d
from .equivariance import OutOfRange, TestRanges, sweep_report
from .errors import ConfigError, InvalidArgument, NotInGroup, UnsupportedDegree, WMCGError
from .sampling import build_layer_plan, plan_table, stream

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
_PARAM_NAMES = ("theta1", "theta3", "alpha", "beta", "gamma", "s01", "s10", "s02", "s20", "s12", "s21")


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=argparse.SUPPRESS, help="YAML run configuration")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override the configured seed (u64)")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output path (stdout when omitted, where allowed)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="wmcg3d", parents=[common],
                                     description="Monte-Carlo augmented 3D group-convolution tools")
    sub = parser.add_subparsers(dest="command", required=True)

    basis = sub.add_parser("basis", help="filter-basis banks and Gram matrices")
    bsub = basis.add_subparsers(dest="basis_command", required=True)
    gen = bsub.add_parser("gen", parents=[common], help="synthesize a kernel bank file")
    gen.add_argument("--weights", help=".npy array of shape (C_o, C_i, J); unit weights when omitted")
    gram = bsub.add_parser("gram", parents=[common], help="basis Gram matrix as CSV")
    gram.add_argument("--mode", choices=["analytic", "sampled"], default="analytic")
    gram.add_argument("--resolution", type=int, default=256, help="radial panels for the analytic Gram")

    dec = sub.add_parser("decompose", parents=[common], help="11-parameter decomposition of a 3x3 matrix")
    dec.add_argument("entries", nargs=9, type=float, help="row-major matrix entries")

    roots = sub.add_parser("roots", parents=[common], help="radial wavenumbers k_n with j_{l-1}(k_n R) = 0")
    roots.add_argument("--degree", "-l", type=int, required=True)
    roots.add_argument("--count", "-n", type=int, default=8)
    roots.add_argument("--radius", "-R", type=float, default=None, help="support radius (default from grid)")

    sub.add_parser("equiv", parents=[common], help="equivariance sweep report (JSON lines)")

    check = sub.add_parser("check", parents=[common], help="run a validation suite")
    check.add_argument("suite", choices=[s.value for s in Suite])

    bench = sub.add_parser("bench", parents=[common], help="synthesis and convolution timings")
    bench.add_argument("--repeats", type=int, default=None)

    dump = sub.add_parser("dump-slices", parents=[common], help="central slices of one kernel as PGM + CSV")
    dump.add_argument("bank", help="bank file")
    dump.add_argument("--co", type=int, default=0)
    dump.add_argument("--ci", type=int, default=0)
    return parser


def _config(args):
    cfg = load_config(getattr(args, "config", None))
    if hasattr(args, "seed"):
        cfg = cfg.with_seed(args.seed)
    return cfg


def _emit(args, text: str):
    out = getattr(args, "out", None)
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _weights(cfg, path, n_bases):
    shape = (cfg.layer.c_out, cfg.layer.c_in, n_bases)
    if path is None:
        return np.ones(shape)
    w = np.load(path)
    if w.shape != shape:
        raise InvalidArgument(f"weights in {path} have shape {w.shape}, expected {shape}")
    return w


def cmd_basis_gen(args):
    cfg = _config(args)
    out = getattr(args, "out", None) or "bank.wmcg"
    grid = cfg.kernel_grid()
    indices = cfg.basis_indices()
    plan = build_layer_plan(cfg.augmentation_config(), cfg.layer.c_out, cfg.layer.c_in, grid.k, cfg.layer.layer_id)
    w = _weights(cfg, args.weights or cfg.layer.weights, len(indices))
    bank = build_kernel_bank(w, indices, cfg.radial_profile(), grid, plan, cfg.basis.normalize)
    bankio.write_bank(out, bank)
    with open(out + ".plan.tsv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(plan_table(plan))
    print(f"wrote {out} shape={bank.shape} plan={out}.plan.tsv")
    return EXIT_OK


def cmd_basis_gram(args):
    cfg = _config(args)
    indices = cfg.basis_indices()
    grid = cfg.kernel_grid()
    if args.mode == "analytic":
        G = gram_matrix(indices, cfg.radial_profile(), grid.R, args.resolution)
    else:
        G = gram_matrix(list(sample_bases(indices, cfg.radial_profile(), grid, normalize=cfg.basis.normalize)))
    head = ",".join(f"l{b.l}m{b.m}n{b.n}" for b in indices)
    rows = [",".join(repr(float(v)) for v in row) for row in G]
    _emit(args, head + "\n" + "\n".join(rows) + "\n")
    return EXIT_OK


def cmd_decompose(args):
    Y = np.array(args.entries, dtype=np.float64).reshape(3, 3)
    p = decompose_gl3(Y)
    residual = float(np.max(np.abs(compose_params(p) - Y)))
    lines = [f"{name} {v!r}" for name, v in zip(_PARAM_NAMES, p.as_array().tolist())]
    lines.append(f"residual {residual!r}")
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_roots(args):
    cfg = _config(args)
    R = cfg.kernel_grid().R if args.radius is None else args.radius
    k = bessel_boundary_roots(args.degree, R, args.count)
    _emit(args, "".join(f"{n} {v:.15g}\n" for n, v in enumerate(k, start=1)))
    return EXIT_OK


def _equiv_factories(cfg):
    e = cfg.equiv
    grid = cfg.kernel_grid()
    indices = cfg.basis_indices()
    profile = cfg.radial_profile()
    padding = PaddingMode.Circular if e.out_of_range == OutOfRange.Wrap.value else PaddingMode.Zero
    c = e.channels

    def wmcg(sample_seed):
        aug = cfg.with_seed(sample_seed % 2 ** 64).augmentation_config()
        plan = build_layer_plan(aug, c, c, grid.k, cfg.layer.layer_id)
        w = stream(sample_seed, 1).standard_normal((c, c, len(indices)))
        return WMCGLayer(w, plan, indices, profile, grid, padding, cfg.basis.normalize)

    def standard(sample_seed):
        K = stream(sample_seed, 2).standard_normal((c, c, grid.k, grid.k, grid.k))
        return lambda x: conv3d(x, K, padding)

    return wmcg if e.layer == "wmcg" else standard


def cmd_equiv(args):
    cfg = _config(args)
    e = cfg.equiv
    ranges = TestRanges(e.shear_angle_range, e.scale_range, e.rotation_range)
    report = sweep_report(_equiv_factories(cfg), e.family, e.n_samples, cfg.seed, ranges=ranges,
                          kernel_size=cfg.grid.kernel_size, size=e.size, channels=e.channels, kind=e.volume,
                          interpolation=e.interpolation, out_of_range=e.out_of_range)
    _emit(args, report.to_lines())
    return EXIT_OK


def cmd_check(args):
    cfg = _config(args)
    results = run_suite(args.suite, cfg)
    _emit(args, "".join(m.line() + "\n" for m in results))
    failed = [m for m in results if not m.passed]
    if failed:
        print(f"check {args.suite} failed: {failed[0].name}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def bench_timings(cfg, repeats, inner=3):
    """Median wall times of bank synthesis, convolution with the synthesized
    bank and convolution with a plain random bank of the same shape.

    Synthesis is timed first. The two convolutions then run on the same
    input, alternating in order; each timing is the mean of ``inner``
    back-to-back calls, after one untimed warm-up call of each.
    """
    if repeats < 3:
        raise InvalidArgument(f"repeats must be >= 3, got {repeats}")
    grid = cfg.kernel_grid()
    indices = cfg.basis_indices()
    profile = cfg.radial_profile()
    c_out, c_in = cfg.layer.c_out, cfg.layer.c_in
    plan = build_layer_plan(cfg.augmentation_config(), c_out, c_in, grid.k, cfg.layer.layer_id)
    rng = stream(cfg.seed, 3)
    w = rng.standard_normal((c_out, c_in, len(indices)))
    plain = KernelBank(rng.standard_normal((c_out, c_in, grid.k, grid.k, grid.k)))
    x = rng.standard_normal((c_in,) + (cfg.bench.size,) * 3)
    padding = cfg.padding()

    def conv_time(kernels):
        t0 = time.perf_counter()
        for _ in range(inner):
            conv3d(x, kernels, padding)
        return (time.perf_counter() - t0) / inner

    synth, pre, base = [], [], []
    for _ in range(repeats):
        t0 = time.perf_counter()
        bank = build_kernel_bank(w, indices, profile, grid, plan, cfg.basis.normalize)
        synth.append(time.perf_counter() - t0)
    conv3d(x, bank, padding)
    conv3d(x, plain, padding)
    for r in range(repeats):
        if r % 2 == 0:
            pre.append(conv_time(bank))
            base.append(conv_time(plain))
        else:
            base.append(conv_time(plain))
            pre.append(conv_time(bank))
    return statistics.median(synth), statistics.median(pre), statistics.median(base)


def cmd_bench(args):
    cfg = _config(args)
    repeats = cfg.bench.repeats if args.repeats is None else args.repeats
    synth, pre, base = bench_timings(cfg, repeats)
    ratio = pre / base
    ok = abs(ratio - 1.0) <= cfg.bench.tolerance
    lines = [
        f"repeats {repeats}",
        f"shape c_out={cfg.layer.c_out} c_in={cfg.layer.c_in} k={cfg.grid.kernel_size} size={cfg.bench.size}",
        f"synthesis_median_s {synth:.6f}",
        f"conv_precomputed_median_s {pre:.6f}",
        f"conv_plain_median_s {base:.6f}",
        f"ratio {ratio:.4f}",
        f"{'PASS' if ok else 'FAIL'} ratio within {cfg.bench.tolerance:.0%}",
    ]
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_dump_slices(args):
    prefix = getattr(args, "out", None) or "slices"
    paths = bankio.dump_slices(bankio.read_bank(args.bank), args.co, args.ci, prefix)
    print("\n".join(paths))
    return EXIT_OK


_COMMANDS = {
    "decompose": cmd_decompose,
    "roots": cmd_roots,
    "equiv": cmd_equiv,
    "check": cmd_check,
    "bench": cmd_bench,
    "dump-slices": cmd_dump_slices,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if args.command == "basis":
        handler = cmd_basis_gen if args.basis_command == "gen" else cmd_basis_gram
    else:
        handler = _COMMANDS[args.command]
    try:
        return handler(args)
    except (ConfigError, InvalidArgument, NotInGroup, UnsupportedDegree) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WMCGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
