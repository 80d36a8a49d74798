"""Command line interface.

Subcommands: ``decompose``, ``convergence``, ``noise``, ``bench``,
``kernel-info`` and ``points``.  Exit status is 0 on success, 2 for
configuration errors and 3 for data errors.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    EmptyFile,
    MissingPointSet,
    NormError,
    NotSPD,
    ParseError,
)
from .experiments import (
    DEFAULT_C,
    kernel_info,
    load_config,
    run_convergence,
    run_noise,
    run_timing,
)
from .point_sets import (
    FETCH_NOTE,
    PointSet,
    fibonacci_points,
    load_points,
    mesh_norm,
    random_points,
    save_points,
)
from .quasi_interp import VectorFieldSamples, qi_decompose
from .zonal_kernels import kernel_for_order

log = logging.getLogger("sphvqi")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

INPUT_COLUMNS = ("x1", "x2", "x3", "f1", "f2", "f3")
OUTPUT_COLUMNS = (
    "y1", "y2", "y3",
    "div1", "div2", "div3",
    "curl1", "curl2", "curl3",
    "comb1", "comb2", "comb3",
)


def read_samples(path) -> VectorFieldSamples:
    """Samples from a CSV with columns ``x1,x2,x3,f1,f2,f3``.

    Lines starting with ``#`` are skipped.  Node norms must be within 1e-6
    of one; nodes are renormalised.
    """
    path = Path(path)
    if not path.exists():
        raise MissingPointSet(str(path))
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise EmptyFile(f"{path}: no rows")
    header = [h.strip() for h in rows[0]]
    if tuple(header) != INPUT_COLUMNS:
        raise ParseError(f"{path}: expected header {','.join(INPUT_COLUMNS)}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if data.size == 0:
        raise EmptyFile(f"{path}: no samples")
    if data.ndim != 2 or data.shape[1] != 6:
        raise ParseError(f"{path}: every row needs 6 values")
    x = data[:, :3]
    norms = np.linalg.norm(x, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-6):
        raise NormError(f"{path}: node off the unit sphere")
    x = x / norms[:, None]
    return VectorFieldSamples(PointSet(x, source=f"file:{path}"), data[:, 3:])


def write_decomposition(path, result, meta: dict) -> None:
    with open(path, "w", newline="") as fh:
        for k, v in meta.items():
            fh.write(f"#{k}: {v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(OUTPUT_COLUMNS)
        block = np.hstack([result.eval_points, result.div, result.curl, result.combined])
        for row in block:
            w.writerow([repr(float(v)) for v in row])


def read_decomposition(path) -> np.ndarray:
    """Numeric block of a decomposition CSV, shape (M, 12)."""
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])


def _eval_points(args) -> np.ndarray:
    if args.eval_file:
        return load_points(args.eval_file).nodes
    return fibonacci_points(args.eval_size).nodes


def cmd_decompose(args) -> int:
    samples = read_samples(args.input)
    samples.check_tangency()
    if args.c is not None:
        c = args.c
    else:
        try:
            c = DEFAULT_C[args.family][args.order]
        except KeyError:
            raise ConfigError(f"no default rho constant for {args.family} order {args.order}") from None
    rho = args.rho if args.rho is not None else c * samples.N ** (-0.5 * args.rho_power)
    try:
        kernel = kernel_for_order(args.family, rho, args.order)
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from None
    result = qi_decompose(kernel, samples, _eval_points(args), args.backend, check=False)
    meta = {"kernel": kernel.label, "rho": repr(kernel.rho), "N": samples.N}
    write_decomposition(args.output, result, meta)
    log.info("wrote %d rows to %s", len(result), args.output)
    return EXIT_OK


def _overrides(args, names) -> dict:
    out = {}
    for name in names:
        v = getattr(args, name, None)
        if v is not None:
            out[name] = v
    return out


_EXPERIMENT_KEYS = (
    "field", "family", "orders", "c_values", "rho_power", "h_mode", "point_source",
    "points_dir", "n_list", "eval_size", "noise_levels", "realizations", "seed",
    "methods", "sbf_max_n", "sbf_n_list", "repeats", "target_error", "backend",
)


def _config(args):
    return load_config(args.config, _overrides(args, _EXPERIMENT_KEYS))


def cmd_convergence(args) -> int:
    report = run_convergence(_config(args), args.output)
    if args.output is None:
        sys.stdout.write(report.to_csv())
    return EXIT_OK


def cmd_noise(args) -> int:
    report = run_noise(_config(args), args.output)
    if args.output is None:
        sys.stdout.write(report.to_csv())
    return EXIT_OK


def cmd_bench(args) -> int:
    report = run_timing(_config(args), args.output)
    if args.output is None:
        sys.stdout.write(report.to_csv())
    return EXIT_OK


def cmd_kernel_info(args) -> int:
    report = kernel_info(args.family, args.order, args.rho, args.L, args.output)
    if args.output is None:
        sys.stdout.write(report.to_csv())
    return EXIT_OK


def cmd_points(args) -> int:
    if args.fetch_note:
        sys.stdout.write(FETCH_NOTE)
        return EXIT_OK
    if args.mesh_norm:
        P = load_points(args.mesh_norm)
        print(f"N={P.N} h={mesh_norm(P, args.resolution):.6g}")
        return EXIT_OK
    if args.generate:
        if args.N is None or args.output is None:
            raise ConfigError("--generate needs -N and --output")
        if args.generate == "fibonacci":
            P = fibonacci_points(args.N)
        else:
            P = random_points(args.N, args.seed)
        save_points(P, args.output)
        return EXIT_OK
    raise ConfigError("points: choose --fetch-note, --generate or --mesh-norm")


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file with [section] headers")
    p.add_argument("--output", "-o", help="CSV output path (stdout if omitted)")
    p.add_argument("--field")
    p.add_argument("--family")
    p.add_argument("--orders", help="comma-separated orders m")
    p.add_argument("--c-values", dest="c_values", help="rho constants aligned with --orders")
    p.add_argument("--rho-power", dest="rho_power", type=float)
    p.add_argument("--h-mode", dest="h_mode", choices=("proxy", "measured"))
    p.add_argument("--point-source", dest="point_source")
    p.add_argument("--points-dir", dest="points_dir")
    p.add_argument("--n-list", dest="n_list", help="comma-separated node counts")
    p.add_argument("--eval-size", dest="eval_size", type=int)
    p.add_argument("--noise-levels", dest="noise_levels")
    p.add_argument("--realizations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--methods", help="qi,sbf")
    p.add_argument("--sbf-max-n", dest="sbf_max_n", type=int)
    p.add_argument("--sbf-n-list", dest="sbf_n_list")
    p.add_argument("--repeats", type=int)
    p.add_argument("--target-error", dest="target_error", type=float)
    p.add_argument("--backend", choices=("python", "cython"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sphvqi",
        description="Vector quasi-interpolation on the sphere with div/curl-free kernels.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="split sampled vectors into div- and curl-free parts")
    p.add_argument("--input", "-i", required=True, help="CSV with x1,x2,x3,f1,f2,f3")
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--family", default="we32")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--rho", type=float, help="explicit scale; default c * N^(-p/2)")
    p.add_argument("--c", type=float, help="rho constant (family/order default)")
    p.add_argument("--rho-power", dest="rho_power", type=float, default=0.5)
    p.add_argument("--eval-size", dest="eval_size", type=int, default=10000,
                   help="Fibonacci evaluation grid size")
    p.add_argument("--eval-file", dest="eval_file", help="evaluation points file")
    p.add_argument("--backend", choices=("python", "cython"))
    p.set_defaults(func=cmd_decompose)

    for name, func, text in (
        ("convergence", cmd_convergence, "error and rate table over node counts"),
        ("noise", cmd_noise, "QI versus SBF under additive noise"),
        ("bench", cmd_bench, "wall-time scaling and work-precision"),
    ):
        p = sub.add_parser(name, help=text)
        _add_experiment_flags(p)
        p.set_defaults(func=func)

    p = sub.add_parser("kernel-info", help="Fourier-Legendre coefficients of a kernel")
    p.add_argument("--family", default="gaussian")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--L", type=int, default=100)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_kernel_info)

    p = sub.add_parser("points", help="point-set utilities")
    p.add_argument("--fetch-note", action="store_true", help="describe the external point files")
    p.add_argument("--generate", choices=("fibonacci", "random"))
    p.add_argument("-N", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mesh-norm", dest="mesh_norm", help="report the fill distance of a file")
    p.add_argument("--resolution", type=int)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_points)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (ParseError, NormError, EmptyFile, MissingPointSet, NotSPD) as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
