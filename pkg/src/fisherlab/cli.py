"""Command-line front end: ``fisherlab {reproduce,conjecture,sweep,check}``.

Exit codes: 0 ok, 1 tolerance or invariant failure, 2 I/O failure,
3 grid resources exhausted, 4 bad initial state, 64 usage error.
"""
from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from pathlib import Path

from . import analytic as an
from .errors import GridResourceError, GridTooSmallError, InvariantError, StateError
from .fisher import Estimator
from .grid import BOUNDARY_TOL
from .propagator import ProductEvaluator, RegridPolicy, _map_ordered, run_series
from .series import (CurveSeries, crossing_time, fit_decay, linear_times, log_times,
                     series_to_csv, series_to_json, tail_window)
from .states import FileState, Hermite, parse_state

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_IO = 2
EXIT_RESOURCE = 3
EXIT_STATE = 4
EXIT_USAGE = 64

REL_ERR_TOL = 1e-3
MAX_REPRODUCE_K = 5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


# ---------------------------------------------------------------- config

def _scalar(text: str):
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    return text


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment.  Keys use ``-`` or ``_``."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise UsageError(f"{path}:{lineno}: empty key")
        out[key.replace("-", "_")] = _scalar(value)
    return out


# ---------------------------------------------------------------- parser

def _positive_float(text):
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _int_list(text):
    return [int(s) for s in str(text).split(",") if s.strip()]


def _float_list(text):
    return [_positive_float(s) for s in str(text).split(",") if s.strip()]


def _common(p):
    p.add_argument("--estimator", choices=["density", "amplitude"], default="density")
    p.add_argument("--regrid", choices=[r.value for r in RegridPolicy],
                   default=RegridPolicy.AUTO_EXPAND.value)
    p.add_argument("--max-n", type=int, default=None, help="grid sample cap")
    p.add_argument("--workers", type=int, default=None,
                   help="worker threads (default: CPU count)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--threshold", type=float, default=4.0)
    p.add_argument("--boundary-tol", type=_positive_float, default=BOUNDARY_TOL,
                   help="allowed probability mass in the outer 5%% of a grid")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fisherlab",
                     description="Fisher-information products of free 1-D wave packets.")
    parser.add_argument("--config", help="flat key = value file; flags override it")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    rep = sub.add_parser("reproduce", help="Hermite-Gaussian product curve vs closed form")
    rep.add_argument("--k", type=int, default=0)
    rep.add_argument("--delta", type=_positive_float, default=1.0)
    rep.add_argument("--t-max", type=_positive_float, default=None,
                     help="default 10 * delta**2")
    rep.add_argument("--steps", type=int, default=41)
    rep.add_argument("--out", default="-", help="output file, '-' for stdout")
    _common(rep)

    con = sub.add_parser("conjecture", help="long-time decay fit for an arbitrary state")
    con.add_argument("--state", default="gaussian(1)")
    con.add_argument("--t-max", type=_positive_float, default=100.0)
    con.add_argument("--t-min", type=_positive_float, default=None,
                     help="first log-spaced time (default t_max / 100)")
    con.add_argument("--steps", type=int, default=60)
    con.add_argument("--fit-tail-fraction", type=float, default=0.35)
    con.add_argument("--out", default="-")
    _common(con)

    swp = sub.add_parser("sweep", help="reproduce over a k x delta grid")
    swp.add_argument("--k", type=_int_list, default="0,1")
    swp.add_argument("--delta", type=_float_list, default="1")
    swp.add_argument("--t-max", type=_positive_float, default=None,
                     help="default 10 * delta**2 per member")
    swp.add_argument("--steps", type=int, default=41)
    swp.add_argument("--out", required=False, default=None, help="output directory")
    _common(swp)

    sub.add_parser("check", help="run the invariant suite")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = read_config(known.config)
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for sp in sub_action.choices.values():
        dests = {a.dest for a in sp._actions}
        # string defaults go through the option's type converter
        sp.set_defaults(**{k: (v if isinstance(v, bool) else str(v))
                           for k, v in cfg.items() if k in dests})
    known_keys = set().union(*({a.dest for a in sp._actions}
                               for sp in sub_action.choices.values()))
    unknown = sorted(set(cfg) - known_keys - {"config"})
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")


# ---------------------------------------------------------------- helpers

def _emit(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="")


def _say(args, message: str) -> None:
    # keep stdout clean when the series itself goes there
    stream = sys.stderr if getattr(args, "out", None) in (None, "-") else sys.stdout
    print(message, file=stream)


def _render(series: CurveSeries, fmt: str, fit=None) -> str:
    return series_to_json(series, fit) if fmt == "json" else series_to_csv(series)


def analytic_product_fn(k: int, delta: float):
    """Reference product at time t: closed form for k <= 1, else quadrature."""
    i_p = an.fisher_p_exact(k, delta)

    def fn(t):
        st = an.AnalyticState(k, delta, t)
        closed = an.product_closed(st)
        return closed if closed is not None else an.fisher_x_quadrature(st) * i_p
    return fn


def _check_steps(steps):
    if steps < 2:
        raise UsageError("--steps must be at least 2")


def _evaluator(spec, args, t_max):
    wf0 = spec.build(spec.provisional_grid())
    source = None if isinstance(spec, FileState) else spec.build
    return ProductEvaluator(wf0, policy=args.regrid, estimator=Estimator.parse(args.estimator),
                            source=source, max_n=args.max_n, t_max=t_max,
                            boundary_tol=args.boundary_tol)


def reproduce_series(k: int, delta: float, t_max: float, steps: int, args, workers=None):
    spec = Hermite(k, delta)
    ev = _evaluator(spec, args, t_max)
    meta = {"k": k, "delta": delta, "state": spec.describe()}
    series = run_series(ev, linear_times(t_max, steps), workers=workers, meta=meta)
    ref = analytic_product_fn(k, delta)
    series = series.with_analytic(ref)
    cross = crossing_time(series, args.threshold, evaluate=ev.product)
    return series, cross


# ---------------------------------------------------------------- commands

def cmd_reproduce(args) -> int:
    _check_steps(args.steps)
    if not 0 <= args.k <= MAX_REPRODUCE_K:
        raise UsageError(f"--k must lie in [0, {MAX_REPRODUCE_K}]")
    t_max = args.t_max if args.t_max is not None else 10.0 * args.delta ** 2
    series, cross = reproduce_series(args.k, args.delta, t_max, args.steps, args,
                                     workers=args.workers)
    _emit(_render(series, args.format), args.out)
    err = series.max_rel_err()
    _say(args, f"max rel_err: {err:.3e}")
    _say(args, "crossing time: " + ("none" if cross is None else f"{cross:.9g}"))
    return EXIT_OK if err < REL_ERR_TOL else EXIT_TOLERANCE


def cmd_conjecture(args) -> int:
    _check_steps(args.steps)
    t_min = args.t_min if args.t_min is not None else args.t_max / 100.0
    try:
        window_times = log_times(t_min, args.t_max, args.steps)
        tail_window(window_times, args.fit_tail_fraction)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    spec = parse_state(args.state)
    ev = _evaluator(spec, args, args.t_max)
    series = run_series(ev, window_times, workers=args.workers,
                        meta={"state": spec.describe()})
    fit = fit_decay(series, tail_window(series.t, args.fit_tail_fraction))
    verdict = "conjecture-consistent" if fit.exponent < 0 else "counterobservation"
    series = CurveSeries(series.entries, {**series.meta, "verdict": verdict})
    _emit(_render(series, args.format, fit), args.out)
    if args.format == "csv" and args.out not in (None, "-"):
        Path(str(args.out) + ".fit.json").write_text(
            json.dumps({**fit.as_dict(), "verdict": verdict}, indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
    _say(args, f"decay exponent: {fit.exponent:.6f} (amplitude {fit.amplitude:.6g}, "
               f"rms residual {fit.residual:.2e}, window {fit.window[0]:.6g}..{fit.window[1]:.6g})")
    cross = crossing_time(series, args.threshold, evaluate=ev.product)
    _say(args, "crossing time: " + ("none" if cross is None else f"{cross:.9g}"))
    _say(args, verdict)
    return EXIT_OK if fit.exponent < 0 else EXIT_TOLERANCE


def cmd_sweep(args) -> int:
    _check_steps(args.steps)
    if not args.out:
        raise UsageError("sweep needs --out DIRECTORY")
    ks, deltas = args.k, args.delta
    if not ks or not deltas:
        raise UsageError("sweep needs non-empty --k and --delta lists")
    if any(not 0 <= k <= MAX_REPRODUCE_K for k in ks):
        raise UsageError(f"--k values must lie in [0, {MAX_REPRODUCE_K}]")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    members = list(itertools.product(ks, deltas))

    def run(member):
        k, delta = member
        t_max = args.t_max if args.t_max is not None else 10.0 * delta ** 2
        return reproduce_series(k, delta, t_max, args.steps, args, workers=1)

    results = _map_ordered(run, members, args.workers)
    code = EXIT_OK
    for (k, delta), (series, cross) in zip(members, results):
        path = out_dir / f"series_k{k}_delta{delta:g}.{args.format}"
        path.write_text(_render(series, args.format), encoding="utf-8", newline="")
        err = series.max_rel_err()
        print(f"k={k} delta={delta:g}: max rel_err {err:.3e}, crossing "
              + ("none" if cross is None else f"{cross:.9g}") + f" -> {path}")
        if err >= REL_ERR_TOL:
            code = EXIT_TOLERANCE
    return code


def cmd_check(args) -> int:
    from .checks import run_checks
    return EXIT_OK if run_checks() else EXIT_TOLERANCE


COMMANDS = {"reproduce": cmd_reproduce, "conjecture": cmd_conjecture,
            "sweep": cmd_sweep, "check": cmd_check}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except OSError as exc:
        print(f"fisherlab: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except UsageError as exc:
        print(f"fisherlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"fisherlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StateError as exc:
        print(f"fisherlab: bad state: {exc}", file=sys.stderr)
        return EXIT_STATE
    except (GridResourceError, GridTooSmallError) as exc:
        print(f"fisherlab: grid: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except InvariantError as exc:
        print(f"fisherlab: invariant violated: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except OSError as exc:
        print(f"fisherlab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
