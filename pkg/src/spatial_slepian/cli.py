"""``sst`` command-line interface.

Angles are read in degrees and converted to radians at this boundary.
Every emitted file embeds the resolved command configuration and the
library version.  Exit codes: 0 success, 2 usage error, 3 numerical error,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import bench_bandlimits, run_bench
from .exceptions import BandlimitMismatch, GridError, NumericalError, ScaleError
from .io import (
    FileFormatError,
    ensure_dir,
    load_basis,
    load_coefficients,
    load_so3,
    load_sphere_signal,
    save_basis,
    save_coefficients,
    save_mask_csv,
    save_so3,
    save_sphere_signal,
)
from .lva import build_ensemble, score_detection, variance_maps, detect_region
from .slepian import PolarCap, SphericalEllipse, slepian_basis, zonal_basis
from .sphere import HarmonicCoefficients, SphereSignal, build_grid, sht_forward
from .sst import (
    SO3Grid,
    SO3Signal,
    frame_bounds,
    frame_constant,
    inverse_sst,
    so3_analysis,
    sst_fast,
    sst_point,
    tight_frame_ratio,
    zonal_sst,
)
from .wigner import EulerAngles, build_delta_table

log = logging.getLogger("spatial_slepian")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------


def _floats(text, n=None):
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def _pos_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _ints(text):
    try:
        return [int(x) for x in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def parse_region(text):
    """``cap:15`` or ``ellipse:20,25[:rot=60,90,45]`` (degrees)."""
    parts = text.split(":")
    kind = parts[0].strip().lower()
    if kind == "cap" and len(parts) == 2:
        return _cap(float(parts[1]))
    if kind == "ellipse" and len(parts) in (2, 3):
        theta_c, a = _floats(parts[1], 2)
        rot = (0.0, 0.0, 0.0)
        if len(parts) == 3:
            if not parts[2].startswith("rot="):
                raise UsageError(f"bad region rotation {parts[2]!r}")
            rot = _floats(parts[2][4:], 3)
        return _ellipse(theta_c, a, rot)
    raise UsageError(f"cannot parse region {text!r}")


def _cap(deg):
    if not 0.0 < deg <= 180.0:
        raise UsageError(f"cap angle must lie in (0, 180] degrees, got {deg}")
    return PolarCap(math.radians(deg))


def _ellipse(theta_c, a, rot):
    try:
        return SphericalEllipse(math.radians(theta_c), math.radians(a), EulerAngles.from_degrees(*rot))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _threads(n):
    if n is not None:
        return max(1, n)
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def _config(args):
    cfg = {}
    for k, v in vars(args).items():
        if k == "func":
            continue
        if isinstance(v, Path):
            v = str(v.resolve())
        cfg[k] = v
    cfg["version"] = __version__
    return cfg


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_basis(args):
    chosen = [x is not None for x in (args.cap_deg, args.ellipse)]
    if sum(chosen) != 1:
        raise UsageError("give exactly one of --cap-deg or --ellipse")
    if args.cap_deg is not None:
        cap = _cap(args.cap_deg)
        if args.all_orders:
            basis = slepian_basis(cap, args.L, n_keep=args.store_first)
        else:
            basis = zonal_basis(cap.Theta_c, args.L)
    else:
        region = _ellipse(*args.ellipse, args.rot or (0.0, 0.0, 0.0))
        basis = slepian_basis(region, args.L)
    save_basis(args.out, basis, args.store_first, _config(args), args.format)
    print(f"shannon={basis.shannon!r} n_well={basis.n_well} stored={min(args.store_first or basis.n_well, basis.n_columns)}")
    return EXIT_OK


def cmd_ingest(args):
    signal = load_sphere_signal(args.input)
    if not np.allclose(signal.values.imag, 0.0) and not args.complex:
        log.warning("input has imaginary parts; they are kept")
    coeffs = sht_forward(signal, args.L)
    save_coefficients(args.out, coeffs, _config(args), args.format)
    print(f"L={args.L} grid={signal.grid.sampling} {signal.grid.n_theta}x{signal.grid.n_phi}")
    return EXIT_OK


def cmd_forward(args):
    f = load_coefficients(args.signal)
    basis = load_basis(args.basis)
    cfg = _config(args)
    if args.sphere:
        grid = build_grid(f.L)
        out = zonal_sst(f, basis, args.alpha, grid)
        save_sphere_signal(args.out, out, f.L, cfg, args.format)
        return EXIT_OK
    if args.direct:
        if f.L != basis.L:
            raise BandlimitMismatch(f"signal L={f.L}, basis L={basis.L}")
        grid = SO3Grid(f.L)
        table = build_delta_table(f.L)
        n = grid.n
        vals = np.empty((n, n, n), dtype=complex)
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    vals[a, b, c] = sst_point(f, basis, args.alpha, grid.angles(a, b, c), table)
        F = SO3Signal(grid, vals, args.alpha)
    else:
        F = sst_fast(f, basis, args.alpha, workers=_threads(args.threads))
    save_so3(args.out, F, cfg, args.format)
    return EXIT_OK


def cmd_inverse(args):
    F = load_so3(args.input)
    basis = load_basis(args.basis)
    f = inverse_sst(so3_analysis(F), basis, F.alpha, args.eps)
    save_coefficients(args.out, f, _config(args), args.format)
    return EXIT_OK


def cmd_frame_check(args):
    basis = load_basis(args.basis)
    n = args.n or basis.n_well
    if args.signal is not None:
        signals = [load_coefficients(args.signal)]
    else:
        if args.seed is None:
            raise UsageError("--seed is required when testing random signals")
        rng = np.random.default_rng(args.seed)
        L = basis.L
        signals = [
            HarmonicCoefficients(L, rng.standard_normal(L * L) + 1j * rng.standard_normal(L * L))
            for _ in range(args.random)
        ]
    ratios = [tight_frame_ratio(f, basis, n) for f in signals]
    A, B = frame_bounds(basis, n)
    report = {
        "n": n,
        "frame_constant": frame_constant(basis, n),
        "frame_bounds": [A, B],
        "ratios": ratios,
        "max_abs_deviation": max(abs(r - 1.0) for r in ratios),
    }
    print(json.dumps(report, indent=2))
    if args.strict and report["max_abs_deviation"] > args.tol:
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_bench(args):
    Ls = bench_bandlimits(args.lmin, args.lmax)
    report = run_bench(Ls, args.seed, args.repeats, _threads(args.threads))
    text = report.to_csv()
    if args.out:
        cfg = json.dumps(_config(args), sort_keys=True)
        Path(args.out).write_text(f"# {cfg}\n" + text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_lva_run(args):
    region = parse_region(args.region)
    out = ensure_dir(args.out)
    cfg = _config(args)
    zb = zonal_basis(_cap(args.cap_deg).Theta_c, args.L)
    alphas = args.alphas or list(range(1, zb.n_well + 1))
    if max(alphas) > zb.n_columns:
        raise ScaleError(f"scale {max(alphas)} outside 1..{zb.n_columns}")
    ens = build_ensemble(args.L, args.N, region, args.bvr_db, args.seed)
    ext = "csv" if args.format == "csv" else "shc"
    save_coefficients(out / f"background.{ext}", ens.background, cfg, args.format)
    for j, (v, f) in enumerate(zip(ens.variations, ens.observations), start=1):
        save_coefficients(out / f"variation_{j:03d}.{ext}", v, cfg, args.format)
        save_coefficients(out / f"observation_{j:03d}.{ext}", f, cfg, args.format)
    maps = variance_maps(ens.observations, zb, alphas, workers=_threads(args.threads))
    summary = {"config": cfg, "scales": {}}
    for alpha, vm in maps.items():
        sig = SphereSignal(vm.grid, vm.values)
        ext = "csv" if args.format == "csv" else "bin"
        save_sphere_signal(out / f"variance_alpha{alpha:02d}.{ext}", sig, args.L,
                           {**cfg, "alpha": alpha}, args.format, real=True)
        mask = detect_region(vm.values, args.q, vm.grid.area_weights())
        save_mask_csv(out / f"mask_alpha{alpha:02d}.csv", mask, vm.grid, {**cfg, "alpha": alpha})
        score = score_detection(vm, region, args.q, args.dilation_deg)
        summary["scales"][str(alpha)] = {
            "argmax_inside": score.argmax_inside,
            "fraction_inside_dilated": score.fraction_inside,
            "masked_points": int(mask.sum()),
        }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    print(json.dumps(summary["scales"], indent=2, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=_pos_int, default=None,
                        help="cap on internal parallelism (default: available cores)")
    common.add_argument("--format", choices=("csv", "bin"), default="bin", help="output encoding")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="sst", description="Spatial-Slepian transform on the sphere.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("basis", parents=[common], help="build and store a Slepian basis")
    b.add_argument("--L", type=_pos_int, required=True)
    b.add_argument("--cap-deg", type=float, help="polar cap half-angle; zonal basis unless --all-orders")
    b.add_argument("--all-orders", action="store_true", help="keep every order of the cap basis")
    b.add_argument("--ellipse", type=lambda s: _floats(s, 2), metavar="THETA_C,A",
                   help="spherical ellipse focus colatitude and semi-major arc")
    b.add_argument("--rot", type=lambda s: _floats(s, 3), metavar="PHI,THETA,OMEGA")
    b.add_argument("--store-first", type=_pos_int, default=None, help="columns to store (default n_well)")
    b.add_argument("--out", type=Path, required=True)
    b.set_defaults(func=cmd_basis)

    i = sub.add_parser("ingest", parents=[common], help="map file to harmonic coefficients")
    i.add_argument("--in", dest="input", type=Path, required=True)
    i.add_argument("--L", type=_pos_int, required=True)
    i.add_argument("--complex", action="store_true", help="input is expected to be complex")
    i.add_argument("--out", type=Path, required=True)
    i.set_defaults(func=cmd_ingest)

    f = sub.add_parser("forward", parents=[common], help="forward transform")
    f.add_argument("--signal", type=Path, required=True)
    f.add_argument("--basis", type=Path, required=True)
    f.add_argument("--alpha", type=_pos_int, default=1)
    mode = f.add_mutually_exclusive_group()
    mode.add_argument("--fast", action="store_true", default=True)
    mode.add_argument("--direct", action="store_true", help="evaluate every node by the direct sum")
    mode.add_argument("--sphere", action="store_true", help="zonal basis: emit a sphere-domain map")
    f.add_argument("--out", type=Path, required=True)
    f.set_defaults(func=cmd_forward)

    v = sub.add_parser("inverse", parents=[common], help="recover coefficients from a transform file")
    v.add_argument("--in", dest="input", type=Path, required=True)
    v.add_argument("--basis", type=Path, required=True)
    v.add_argument("--eps", type=float, default=None, help="singularity threshold")
    v.add_argument("--out", type=Path, required=True)
    v.set_defaults(func=cmd_inverse)

    c = sub.add_parser("frame-check", parents=[common], help="tight-frame ratio and frame bounds")
    c.add_argument("--basis", type=Path, required=True)
    c.add_argument("--signal", type=Path, default=None)
    c.add_argument("--random", type=_pos_int, default=20, help="number of random test signals")
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--n", type=_pos_int, default=None, help="scales summed (default n_well)")
    c.add_argument("--tol", type=float, default=1e-10)
    c.add_argument("--strict", action="store_true", help="exit 3 when a ratio misses 1 by more than --tol")
    c.set_defaults(func=cmd_frame_check)

    k = sub.add_parser("bench", parents=[common], help="timing of the fast transform")
    k.add_argument("--lmin", type=_pos_int, default=16)
    k.add_argument("--lmax", type=_pos_int, default=128)
    k.add_argument("--repeats", type=_pos_int, default=3)
    k.add_argument("--seed", type=int, required=True)
    k.add_argument("--out", type=Path, default=None)
    k.set_defaults(func=cmd_bench)

    lva = sub.add_parser("lva", help="localized variation analysis")
    lsub = lva.add_subparsers(dest="lva_command", required=True)
    r = lsub.add_parser("run", parents=[common], help="seeded ensemble experiment")
    r.add_argument("--L", type=_pos_int, default=32)
    r.add_argument("--N", type=_pos_int, default=10)
    r.add_argument("--bvr-db", type=float, default=20.0)
    r.add_argument("--region", default="ellipse:20,25:rot=60,90,45")
    r.add_argument("--cap-deg", type=float, default=15.0)
    r.add_argument("--alphas", type=_ints, default=None, help="scales (default 1..n_well)")
    r.add_argument("--q", type=float, default=0.95, help="detection quantile")
    r.add_argument("--dilation-deg", type=float, default=5.0)
    r.add_argument("--seed", type=int, required=True)
    r.add_argument("--out", type=Path, required=True)
    r.set_defaults(func=cmd_lva_run)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, BandlimitMismatch, ScaleError, GridError, ValueError) as exc:
        print(f"sst: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"sst: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, FileFormatError) as exc:
        print(f"sst: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
