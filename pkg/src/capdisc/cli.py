"""Command-line surface.

Subcommands wrap the library one-to-one: discrepancy, grad, lipschitz,
optcheck, oracle, sample, scan. Every compute command accepts --json and
then emits a single run report object; human output is plain lines.

Exit codes: 0 success, 2 input fails a mathematical precondition
(degenerate subset, off-sphere points), 3 unparseable input file, 4 bad
flags or usage.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .discrepancy import (
    FAMILY_FULL,
    FAMILY_REDUCED,
    discrepancy,
    generalized_discrepancy,
)
from .errors import (
    DegeneracyError,
    DimensionError,
    NormalizationError,
    PointSetFormatError,
)
from .optimality import ACTIVITY_TOL, optimality_residual
from .oracle import oracle_discrepancy
from .pointset import load_pointset, sample_uniform_sphere, save_pointset
from .smooth import FD_STEP, beta_gradient, finite_difference_check, lipschitz_estimate

EXIT_OK = 0
EXIT_DEGENERATE = 2
EXIT_PARSE = 3
EXIT_USAGE = 4


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags by default; 2 is taken
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x):
    return repr(float(x))


def _emit(args, report, human_lines):
    if getattr(args, "json", False):
        print(json.dumps(report, sort_keys=True))
    else:
        for line in human_lines:
            print(line)


def _witness_payload(res):
    return {
        "value": res.value,
        "index_set": list(res.index_set),
        "side": res.side,
        "w": [float(v) for v in res.w],
        "t": res.t,
        "emp_numerator": res.emp.numerator,
        "emp_denominator": res.emp.denominator,
        "cap": res.cap,
        "family": res.family,
        "n_subsets": res.n_subsets,
    }


def cmd_discrepancy(args):
    X = load_pointset(args.input)
    if args.generalized and args.family is not None:
        raise _UsageError("--family applies to the on-sphere mode only")
    t0 = time.perf_counter()
    if args.generalized:
        res = generalized_discrepancy(X, with_locals=args.locals,
                                      threads=args.threads)
    else:
        res = discrepancy(X, family=args.family, with_locals=args.locals,
                          threads=args.threads)
    elapsed = time.perf_counter() - t0
    report = {
        "command": "discrepancy",
        "inputs": {"path": args.input, "generalized": bool(args.generalized),
                   "family": res.family, "threads": args.threads,
                   "d": X.d, "N": X.N},
        "results": _witness_payload(res),
        "timing_seconds": elapsed,
        "version": __version__,
        "seed": None,
    }
    lines = [
        f"value = {_fmt(res.value)}",
        f"witness index set = {{{', '.join(map(str, res.index_set))}}}  "
        f"side = {res.side}",
        f"witness normal w = [{', '.join(_fmt(v) for v in res.w)}]",
        f"witness height t = {_fmt(res.t)}",
        f"empirical = {res.emp}  cap measure = {_fmt(res.cap)}",
        f"family = {res.family}  subsets = {res.n_subsets}  "
        f"time = {elapsed:.3f}s",
    ]
    if args.locals:
        report["results"]["locals"] = [
            {"index_set": list(ld.index_set), "side": ld.side,
             "value": ld.value, "emp_numerator": ld.emp.numerator,
             "emp_denominator": ld.emp.denominator, "cap": ld.cap}
            for ld in res.locals
        ]
        lines.append("locals (index set; side; value; emp; cap):")
        for ld in res.locals:
            lines.append(
                f"  {{{', '.join(map(str, ld.index_set))}}}; {ld.side}; "
                f"{_fmt(ld.value)}; {ld.emp}; {_fmt(ld.cap)}")
    _emit(args, report, lines)
    return EXIT_OK


def cmd_grad(args):
    X = load_pointset(args.input)
    I = _parse_index_set(args.index_set)
    t0 = time.perf_counter()
    table = beta_gradient(X, I)
    fd_error = None
    if args.check_fd:
        fd_error = finite_difference_check(X, I, h=FD_STEP)
    elapsed = time.perf_counter() - t0
    M = table.as_matrix()
    report = {
        "command": "grad",
        "inputs": {"path": args.input, "index_set": list(table.index_set),
                   "d": X.d, "N": X.N},
        "results": {
            "t": table.t,
            "w": [float(v) for v in table.w],
            "c": [float(v) for v in table.c],
            "rho": table.rho,
            "gradient": [[float(v) for v in M[:, l]] for l in range(X.N)],
            "fd_max_relative_error": fd_error,
        },
        "timing_seconds": elapsed,
        "version": __version__,
        "seed": None,
    }
    lines = [
        f"index set = {{{', '.join(map(str, table.index_set))}}}",
        f"t = {_fmt(table.t)}",
        f"w = [{', '.join(_fmt(v) for v in table.w)}]",
        f"c = [{', '.join(_fmt(v) for v in table.c)}]",
        f"rho = {_fmt(table.rho)}",
    ]
    for l in range(1, X.N + 1):
        vec = table.partial(l)
        lines.append(f"grad x({l}) = [{', '.join(_fmt(v) for v in vec)}]")
    if fd_error is not None:
        lines.append(f"max relative finite-difference error = {_fmt(fd_error)}")
    _emit(args, report, lines)
    return EXIT_OK


def cmd_lipschitz(args):
    X = load_pointset(args.input)
    t0 = time.perf_counter()
    est = lipschitz_estimate(X, family=args.family)
    elapsed = time.perf_counter() - t0
    report = {
        "command": "lipschitz",
        "inputs": {"path": args.input, "family": args.family,
                   "d": X.d, "N": X.N},
        "results": {
            "L_exact": est.L_exact,
            "L_rough": est.L_rough,
            "argmax_index_set": list(est.argmax_index_set),
        },
        "timing_seconds": elapsed,
        "version": __version__,
        "seed": None,
    }
    lines = [
        f"L_exact = {_fmt(est.L_exact)}",
        f"L_rough = {_fmt(est.L_rough)}",
        f"attained at index set = "
        f"{{{', '.join(map(str, est.argmax_index_set))}}}",
    ]
    _emit(args, report, lines)
    return EXIT_OK


def cmd_optcheck(args):
    X = load_pointset(args.input)
    t0 = time.perf_counter()
    cert = optimality_residual(X, tol=args.tol)
    elapsed = time.perf_counter() - t0
    report = {
        "command": "optcheck",
        "inputs": {"path": args.input, "tol": args.tol, "d": X.d, "N": X.N},
        "results": {
            "residual": cert.residual,
            "value": cert.active.value,
            "active": [{"index_set": list(I), "side": s,
                        "gamma": cert.gamma[(I, s)]}
                       for I, s in cert.active.entries],
            "lambda": [float(v) for v in cert.lam],
        },
        "timing_seconds": elapsed,
        "version": __version__,
        "seed": None,
    }
    lines = [
        f"value = {_fmt(cert.active.value)}",
        f"residual = {_fmt(cert.residual)}",
        f"active caps = {len(cert.active.entries)}",
    ]
    for I, s in cert.active.entries:
        lines.append(
            f"  {{{', '.join(map(str, I))}}} side {s}  "
            f"gamma = {_fmt(cert.gamma[(I, s)])}")
    lines.append(
        f"lambda = [{', '.join(_fmt(v) for v in cert.lam)}]")
    _emit(args, report, lines)
    return EXIT_OK


def cmd_oracle(args):
    X = load_pointset(args.input)
    t0 = time.perf_counter()
    res = oracle_discrepancy(X, args.n, seed=args.seed, variant=args.variant)
    elapsed = time.perf_counter() - t0
    report = {
        "command": "oracle",
        "inputs": {"path": args.input, "n": args.n, "variant": args.variant,
                   "d": X.d, "N": X.N},
        "results": {
            "value": res.value,
            "best_direction": [float(v) for v in res.best_direction],
            "best_threshold": res.best_threshold,
            "n_directions": res.n_directions,
            "variant": res.variant,
        },
        "timing_seconds": elapsed,
        "version": __version__,
        "seed": args.seed,
    }
    lines = [
        f"value = {_fmt(res.value)} (lower bound, {res.variant} caps)",
        f"best direction = "
        f"[{', '.join(_fmt(v) for v in res.best_direction)}]",
        f"best threshold = {_fmt(res.best_threshold)}",
        f"directions tested = {res.n_directions}",
    ]
    _emit(args, report, lines)
    return EXIT_OK


def cmd_sample(args):
    X = sample_uniform_sphere(args.d, args.n, args.seed)
    save_pointset(X, args.output, format=args.format)
    if not getattr(args, "json", False):
        print(f"wrote {args.output} (d={args.d}, N={args.n}, "
              f"seed={args.seed})")
    else:
        print(json.dumps({
            "command": "sample",
            "inputs": {"d": args.d, "n": args.n, "format": args.format},
            "results": {"path": args.output},
            "timing_seconds": 0.0,
            "version": __version__,
            "seed": args.seed,
        }, sort_keys=True))
    return EXIT_OK


def cmd_scan(args):
    X = load_pointset(args.input)
    l = args.point
    if not 1 <= l <= X.N:
        raise _UsageError(f"--point must be in 1..{X.N}, got {l}")
    base = X.X
    x0 = base[:, l - 1]
    u = _orthogonal_direction(x0, args.direction, X.d)
    thetas = np.linspace(-args.range, args.range, args.steps)

    t0 = time.perf_counter()
    rows = []
    header = None
    for theta in thetas:
        Y = np.array(base, copy=True)
        Y[:, l - 1] = np.cos(theta) * x0 + np.sin(theta) * u
        res = generalized_discrepancy(Y, with_locals=True)
        if header is None:
            header = ["theta", "Lambda"] + [
                f"phi_{'-'.join(map(str, ld.index_set))}_{ld.side}"
                for ld in res.locals
            ]
        rows.append([theta, res.value] + [ld.value for ld in res.locals])
    elapsed = time.perf_counter() - t0

    with open(args.output, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")

    if getattr(args, "json", False):
        print(json.dumps({
            "command": "scan",
            "inputs": {"path": args.input, "point": l,
                       "range": args.range, "steps": args.steps},
            "results": {"path": args.output, "columns": len(header),
                        "rows": len(rows)},
            "timing_seconds": elapsed,
            "version": __version__,
            "seed": None,
        }, sort_keys=True))
    else:
        print(f"wrote {args.output} ({len(rows)} rows, "
              f"{len(header)} columns, {elapsed:.3f}s)")
    return EXIT_OK


def _orthogonal_direction(x0, direction, d):
    """Unit vector orthogonal to x0 spanning the rotation plane."""
    if direction is not None:
        v = np.array([float(s) for s in direction.split(",")])
        if v.shape != (d,):
            raise _UsageError(
                f"--direction needs {d} comma-separated values")
    else:
        v = np.zeros(d)
        v[0] = 1.0
        if abs(x0[0]) > 0.9:
            v[:] = 0.0
            v[1] = 1.0
    u = v - x0 * float(x0 @ v)
    norm = float(np.linalg.norm(u))
    if norm < 1e-12:
        raise _UsageError(
            "--direction is parallel to the chosen point; pick another")
    return u / norm


class _UsageError(Exception):
    pass


def _parse_index_set(text):
    try:
        parts = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise _UsageError(
            f"--index-set must be comma-separated integers, got {text!r}"
        ) from None
    if not parts:
        raise _UsageError("--index-set must not be empty")
    return tuple(parts)


def _build_parser():
    parser = _Parser(prog="capdisc",
                     description="Exact spherical cap discrepancy toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discrepancy", help="exact discrepancy with witness")
    p.add_argument("input", help="point-set file (csv or json)")
    p.add_argument("--family", choices=[FAMILY_FULL, FAMILY_REDUCED],
                   default=None,
                   help="index family; default: reduced (phibar) for N >= 2")
    p.add_argument("--generalized", action="store_true",
                   help="off-sphere mode (extended cap measure, full family)")
    p.add_argument("--locals", action="store_true",
                   help="include the full local-discrepancy table")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads (result is thread-count independent)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_discrepancy)

    p = sub.add_parser("grad", help="gradient of the cap-measure term")
    p.add_argument("input")
    p.add_argument("--index-set", required=True, metavar="I",
                   help='comma-separated 1-based indices, e.g. "1,2"')
    p.add_argument("--check-fd", action="store_true",
                   help="validate against central finite differences")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_grad)

    p = sub.add_parser("lipschitz", help="Lipschitz constant estimates")
    p.add_argument("input")
    p.add_argument("--family", choices=[FAMILY_FULL, FAMILY_REDUCED],
                   default=FAMILY_FULL)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_lipschitz)

    p = sub.add_parser("optcheck", help="necessary-condition residual")
    p.add_argument("input")
    p.add_argument("--tol", type=float, default=ACTIVITY_TOL,
                   help="activity tolerance (default 1e-9)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_optcheck)

    p = sub.add_parser("oracle", help="direction-sampling lower bound")
    p.add_argument("input")
    p.add_argument("--n", type=int, default=10000,
                   help="random directions (2-subset normals always added)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=["closed", "open"], default="closed")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("sample", help="uniform points on the sphere")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser(
        "scan",
        help="rotate one point along a great circle, tabulate all caps")
    p.add_argument("--input", required=True)
    p.add_argument("--point", type=int, required=True,
                   help="1-based index of the point to move")
    p.add_argument("--direction", default=None,
                   help="comma-separated vector fixing the rotation plane")
    p.add_argument("--range", type=float, default=0.5,
                   help="angle range [-R, R] in radians")
    p.add_argument("--steps", type=int, default=401)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_scan)

    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PointSetFormatError as exc:
        print(f"capdisc: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DegeneracyError as exc:
        print(f"capdisc: degenerate input: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except NormalizationError as exc:
        print(f"capdisc: off-sphere input: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (_UsageError, DimensionError, ValueError) as exc:
        print(f"capdisc: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        # downstream consumer (head, less) closed the pipe; exit quietly
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return EXIT_OK
    except OSError as exc:
        # unwritable output path and the like
        print(f"capdisc: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
