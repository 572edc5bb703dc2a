"""Command-line interface: ``maxvisit {bound,table,simulate,verify,envelope}``.

Exit codes: 0 success, 1 usage or I/O error, 2 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction

from . import __version__, bounds, oracle, verify, walk
from .bounds import as_rational

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2

SEED_ENV = "MAXVISIT_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _rational(text: str) -> Fraction:
    try:
        return as_rational(text)
    except (TypeError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _non_negative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}")


def _fraction_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc}")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _text(pairs) -> str:
    return "".join(f"{k}: {v}\n" for k, v in pairs)


def _config(args, *names) -> dict:
    cfg = {"subcommand": args.command}
    for name in names:
        value = getattr(args, name)
        cfg[name] = _fraction_str(value) if isinstance(value, Fraction) else value
    return cfg


# ---------------------------------------------------------------------------


def cmd_bound(args) -> int:
    n, x = args.n, args.x
    method = args.method
    value = bounds.d_value(n, x, method)
    closed = bounds.d_value(n, x, "closed")
    recursion = bounds.d_value(n, x, "recursion")
    hoeff = bounds.hoeffding_bound(n, x) if n >= 1 and x > 0 else None
    report = {
        "n": n,
        "x": _fraction_str(x),
        "method": method,
        "bound": _fraction_str(value),
        "bound_float": float(value),
        "closed_equals_recursion": closed == recursion,
        "hoeffding": hoeff,
    }
    if args.format == "json":
        text = _dumps({"tool_version": __version__, "config": _config(args, "n", "x", "method"),
                       "results": [report]})
    elif args.format == "csv":
        text = _csv([list(report)], [list(report.values())])
    else:
        text = _text([("n", n), ("x", report["x"]), ("D_n(x)", report["bound"]),
                      ("float", repr(float(value))),
                      ("closed_equals_recursion", str(report["closed_equals_recursion"]).lower()),
                      ("hoeffding", "n/a" if hoeff is None else repr(hoeff))])
    _emit(text, args.out)
    return EXIT_OK


def _csv(header_rows, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in header_rows + rows:
        writer.writerow(row)
    return buf.getvalue()


TABLE_HEADER = ["n", "x_num", "x_den", "d_num", "d_den", "d_float", "hoeffding_float"]


def cmd_table(args) -> int:
    if not args.x_min < args.x_max:
        raise UsageError("--x-min must be smaller than --x-max")
    if args.step <= 0:
        raise UsageError("--step must be positive")
    n = args.n
    rows = []
    k_lo = math.ceil(args.x_min / args.step)
    k_hi = math.floor(args.x_max / args.step)
    for k in range(k_lo, k_hi + 1):
        x = k * args.step
        d = bounds.d_value(n, x, args.method)
        hoeff = repr(bounds.hoeffding_bound(n, x)) if n >= 1 and x > 0 else ""
        rows.append([n, x.numerator, x.denominator, d.numerator, d.denominator, repr(float(d)), hoeff])
    if args.format == "json":
        records = [dict(zip(TABLE_HEADER, r)) for r in rows]
        text = _dumps({"tool_version": __version__,
                       "config": _config(args, "n", "x_min", "x_max", "step", "method"),
                       "results": records})
    else:
        text = _csv([TABLE_HEADER], rows)
    _emit(text, args.out)
    return EXIT_OK


DUMP_HEADER = ["index", "stopping_time", "max_level", "max_level_float"]


def _dump_paths(args, sample: walk.PathSample) -> None:
    rows = []
    for i, (stop, top) in enumerate(zip(sample.stop_times, sample.max_level)):
        rows.append([sample.first_index + i, int(stop), _fraction_str(top), repr(float(top))])
    if args.format == "json":
        text = _dumps([dict(zip(DUMP_HEADER, r)) for r in rows])
    else:
        text = _csv([DUMP_HEADER], rows)
    _emit(text, args.dump)


def cmd_simulate(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    if args.paths < 1:
        raise UsageError("--paths must be at least 1")
    est = walk.monte_carlo_estimate(args.n, args.x, args.paths, seed, threads=args.threads)
    target = bounds.d_value(args.n, args.x)
    diff = est.estimate - float(target)
    if est.standard_error > 0:
        z = diff / est.standard_error
    else:
        z = 0.0 if diff == 0 else math.copysign(math.inf, diff)
    report = {
        "n": args.n,
        "x": _fraction_str(args.x),
        "paths": est.paths,
        "seed": est.seed,
        "estimate": est.estimate,
        "standard_error": est.standard_error,
        "exact": _fraction_str(target),
        "exact_float": float(target),
        "z_score": z,
    }
    if args.dump:
        _dump_paths(args, walk.sample_paths(args.n, args.x, args.paths, seed))
    if args.format == "json":
        args.seed = seed
        text = _dumps({"tool_version": __version__,
                       "config": _config(args, "n", "x", "paths", "seed"),
                       "results": [report]})
    elif args.format == "csv":
        text = _csv([list(report)], [list(report.values())])
    else:
        text = _text((k, repr(v) if isinstance(v, float) else v) for k, v in report.items())
    _emit(text, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    results = verify.run_suites(args.suite, args.n_max)
    ok = all(r.passed for r in results)
    payload = {
        "tool_version": __version__,
        "config": _config(args, "suite", "n_max"),
        "results": [r.to_dict() for r in results],
    }
    if args.format == "text":
        text = "".join(f"{'PASS' if r.passed else 'FAIL'} {r.suite} checked={r.checked} "
                       f"worst_violation={r.worst_violation!r}"
                       + (f" error={r.error}" if r.error else "") + "\n" for r in results)
    else:
        text = _dumps(payload)
    _emit(text, args.out)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_envelope(args) -> int:
    n, x = args.n, args.x
    exact = bounds.d_value(n, x)
    if n == 0:
        value, support = float(x <= 0), None
    else:
        value, support = oracle.envelope_at_zero(oracle.continuation_samples(n, x, args.grid))
    report = {
        "n": n,
        "x": _fraction_str(x),
        "grid": args.grid,
        "envelope_value": value,
        "support": list(support) if support is not None else None,
        "exact": _fraction_str(exact),
        "gap": abs(value - float(exact)),
    }
    if args.format == "json":
        text = _dumps({"tool_version": __version__, "config": _config(args, "n", "x", "grid"),
                       "results": [report]})
    elif args.format == "csv":
        text = _csv([list(report)], [[v if not isinstance(v, list) else " ".join(map(repr, v))
                                      for v in report.values()]])
    else:
        text = _text([("n", n), ("x", report["x"]), ("envelope_value", repr(value)),
                      ("support", "none (indicator)" if support is None else f"({support[0]!r}, {support[1]!r})"),
                      ("exact", report["exact"]), ("gap", repr(report["gap"]))])
    _emit(text, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="maxvisit", description="Sharp bounds on the probability that a "
                     "martingale with increments bounded by 1 visits [x, inf) within n steps.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, fmt_default="text", formats=("json", "csv", "text")):
        p.add_argument("--format", choices=formats, default=fmt_default)
        p.add_argument("--out", default=None, help="write the report here instead of stdout")
        p.add_argument("--threads", type=int, default=1, help="worker cap; never changes results")

    p = sub.add_parser("bound", help="compute D_n(x) exactly")
    p.add_argument("--n", type=_non_negative_int, required=True)
    p.add_argument("--x", type=_rational, required=True, help="exact level, e.g. 1.5 or 3/2")
    p.add_argument("--method", choices=("auto", "recursion", "closed"), default="auto")
    common(p)

    p = sub.add_parser("table", help="tabulate D_n over a grid of x")
    p.add_argument("--n", type=_non_negative_int, required=True)
    p.add_argument("--x-min", type=_rational, required=True)
    p.add_argument("--x-max", type=_rational, required=True)
    p.add_argument("--step", type=_rational, required=True)
    p.add_argument("--method", choices=("auto", "recursion", "closed"), default="auto")
    common(p, "csv", ("json", "csv"))

    p = sub.add_parser("simulate", help="Monte Carlo of the extremal stopped walk")
    p.add_argument("--n", type=_non_negative_int, required=True)
    p.add_argument("--x", type=_rational, required=True)
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--seed", type=_non_negative_int, default=None,
                   help=f"defaults to ${SEED_ENV}, else 0")
    p.add_argument("--dump", default=None, help="write one record per path to this file")
    common(p)

    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("--suite", choices=("all",) + verify.SUITES, default="all")
    p.add_argument("--n-max", type=_non_negative_int, default=None)
    common(p, "json")

    p = sub.add_parser("envelope", help="concave-envelope oracle for one step")
    p.add_argument("--n", type=_non_negative_int, required=True)
    p.add_argument("--x", type=_rational, required=True)
    p.add_argument("--grid", type=_positive_float, default=1e-3, help="sampling resolution in t")
    common(p)
    return parser


COMMANDS = {
    "bound": cmd_bound,
    "table": cmd_table,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "envelope": cmd_envelope,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"maxvisit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
