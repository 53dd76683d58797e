"""Command-line front end.

Every subcommand writes CSV or JSON meant for offline analysis.  Exit codes:
0 success, 1 usage or parse error, 2 non-converged result under --strict,
3 a failed inequality in ``verify-lemma``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import asymptotics as asy
from .potential import InverseSquare, PotentialParseError, hypothesis_weight, parse
from .spectral import CountOptions, count_bound_states

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_UNCONVERGED = 2
EXIT_PROPERTY = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _fmt(value) -> str:
    """JSON with floats at 17 significant digits."""
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            return "null"
        return format(value, ".17g")
    if isinstance(value, (int, str)):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{json.dumps(k)}: {_fmt(v)}" for k, v in value.items()) + "}"
    raise TypeError(f"cannot encode {type(value).__name__}")


def _potential(text: str):
    try:
        return parse(text)
    except PotentialParseError as exc:
        raise UsageError(str(exc)) from None


def _positive(kind=float):
    def conv(text):
        try:
            x = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not (x > 0 and math.isfinite(x)):
            raise argparse.ArgumentTypeError(f"must be positive and finite: {text!r}")
        return x

    conv.__name__ = kind.__name__
    return conv


def _add_count_opts(p):
    p.add_argument("--method", choices=("sturm", "nodes"), default="nodes",
                   help="counting recurrence (default: nodes)")
    p.add_argument("--safety", type=_positive(), default=4.0,
                   help="initial truncation is safety*sqrt(c_eff/E) (default: 4)")
    p.add_argument("--L-min", dest="L_min", type=_positive(int), default=1024,
                   help="smallest truncation (default: 1024)")
    p.add_argument("--L-max", dest="L_max", type=_positive(int), default=2**31,
                   help="largest truncation (default: 2^31)")
    p.add_argument("--strict", action="store_true",
                   help="exit with status 2 if any count did not converge")


def _add_grid(p, required=True):
    p.add_argument("--emin", type=_positive(), required=required, help="smallest energy E")
    p.add_argument("--emax", type=_positive(), required=required, help="largest energy E")
    p.add_argument("--per-decade", dest="per_decade", type=_positive(int), required=required,
                   help="grid points per decade")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="boundcount", description=__doc__.splitlines()[0], allow_abbrev=False)
    parser.add_argument("--config", type=Path,
                        help="JSON file whose keys mirror the subcommand's flag names")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="bound states at or below -E, as JSON")
    p.add_argument("--potential", required=True, help="potential in canonical text form")
    p.add_argument("--energy", type=_positive(), required=True, help="threshold E > 0")
    _add_count_opts(p)

    p = sub.add_parser("curve", help="counting curve over a geometric grid, as CSV")
    p.add_argument("--potential", required=True)
    _add_grid(p)
    p.add_argument("--out", type=Path, required=True, help="CSV output path")
    p.add_argument("--workers", type=_positive(int), default=1, help="threads (default: 1)")
    _add_count_opts(p)

    p = sub.add_parser("slope", help="logarithmic slope of a counting curve, as JSON")
    p.add_argument("--in", dest="infile", type=Path, help="curve CSV written by 'curve'")
    p.add_argument("--c", type=float, help="inverse-square coupling for the predicted slope")
    p.add_argument("--potential", help="potential for a direct run (default: inverse_square(c=C))")
    _add_grid(p, required=False)
    p.add_argument("--workers", type=_positive(int), default=1)
    _add_count_opts(p)

    p = sub.add_parser("nodes", help="zero-energy sign-flip growth, as CSV lnN,count")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--nmax", type=_positive(int), required=True)
    p.add_argument("--nmin", type=_positive(int), default=1000, help="default: 1000")
    p.add_argument("--points", type=_positive(int), default=10, help="default: 10")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("verify-lemma", help="randomized splitting-inequality checks, JSON lines")
    p.add_argument("--seed", type=int, default=42, help="default: 42")
    p.add_argument("--instances", type=_positive(int), default=200, help="default: 200")
    p.add_argument("--method", choices=("sturm", "nodes"), default="sturm")
    p.add_argument("--out", type=Path, help="write JSON lines here instead of stdout")

    p = sub.add_parser("kneser", help="classify the discrete spectrum below 0 as Finite/Infinite")
    p.add_argument("--potential", required=True)
    _add_grid(p)
    p.add_argument("--window", type=_positive(int), default=5, help="saturation window (default: 5)")
    _add_count_opts(p)

    p = sub.add_parser("box", help="constant-depth box count, engine vs closed form")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--energy", type=_positive(), required=True)
    p.add_argument("--method", choices=("sturm", "nodes"), default="nodes")

    p = sub.add_parser("hypothesis", help="partial sums of n|V(n)| at several cutoffs")
    p.add_argument("--potential", required=True)
    p.add_argument("--cutoffs", required=True, help="comma-separated list, e.g. 1000,10000,100000")

    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Load ``--config`` (anywhere in argv) into subcommand defaults; return the rest."""
    pre = _Parser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config", type=Path)
    known, rest = pre.parse_known_args(argv)
    if known.config is None:
        return rest
    try:
        cfg = json.loads(known.config.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    command = next((a for a in rest if not a.startswith("-")), None)
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    if command not in subparsers.choices:
        raise UsageError("the subcommand must be given on the command line")
    sp = subparsers.choices[command]
    actions = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = _dest_for(sp, key)
        if dest is None:
            raise UsageError(f"unknown config key {key!r} for {command}")
        action = actions[dest]
        if action.type is not None and value is not None and not isinstance(value, bool):
            try:
                value = action.type(str(value))
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config key {key!r}: {exc}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"config key {key!r} must be one of {sorted(action.choices)}")
        defaults[dest] = value
        action.required = False
    sp.set_defaults(**defaults)
    return rest


def _dest_for(sp, key: str) -> Optional[str]:
    flag = "--" + key.replace("_", "-")
    for action in sp._actions:
        if flag in action.option_strings or key == action.dest:
            return action.dest
    return None


def _count_opts(args) -> CountOptions:
    return CountOptions(method=args.method, safety=args.safety, L_min=args.L_min, L_max=args.L_max)


def _grid(args) -> asy.EnergyGrid:
    if args.emin is None or args.emax is None or args.per_decade is None:
        raise UsageError("--emin, --emax and --per-decade are required")
    try:
        return asy.EnergyGrid(args.emin, args.emax, args.per_decade)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _strict_status(args, results) -> int:
    if getattr(args, "strict", False) and not all(r.converged for r in results):
        return EXIT_UNCONVERGED
    return EXIT_OK


def _cmd_count(args, out) -> int:
    res = count_bound_states(_potential(args.potential), args.energy, _count_opts(args))
    out.write(_fmt(res.to_dict()) + "\n")
    return _strict_status(args, [res])


def _cmd_curve(args, out) -> int:
    curve = asy.counting_curve(_potential(args.potential), _grid(args), _count_opts(args), args.workers)
    args.out.write_text(curve.to_csv())
    return _strict_status(args, [e.result for e in curve.entries])


def _cmd_slope(args, out) -> int:
    if args.infile is not None:
        try:
            curve = asy.CountingCurve.from_csv(args.infile.read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read curve {args.infile}: {exc}") from None
    else:
        if args.potential is None and args.c is None:
            raise UsageError("slope needs --in, --potential or --c")
        if args.potential is not None:
            potential = _potential(args.potential)
        else:
            if not args.c > 0:
                raise UsageError("--c must be positive")
            potential = InverseSquare(args.c)
        curve = asy.counting_curve(potential, _grid(args), _count_opts(args), args.workers)
    try:
        report = asy.slope_estimate(curve, args.c)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out.write(_fmt(report.to_dict()) + "\n")
    return _strict_status(args, [e.result for e in curve.entries])


def _cmd_nodes(args, out) -> int:
    if not args.c > 0.25:
        raise UsageError("--c must exceed 1/4")
    if args.nmax < args.nmin:
        raise UsageError("--nmax must be >= --nmin")
    Ns = np.unique(np.round(np.geomspace(args.nmin, args.nmax, args.points)).astype(np.int64))
    rows = asy.node_growth_curve(args.c, Ns.tolist())
    lines = ["lnN,count"] + [f"{format(ln, '.17g')},{k}" for ln, k in rows]
    args.out.write_text("\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_verify_lemma(args, out) -> int:
    rng = np.random.default_rng(args.seed)
    failed = False
    lines = []
    for _ in range(args.instances):
        V, W, E, eps, L = asy.random_lemma_instance(rng)
        rep = asy.verify_splitting_inequalities(V, W, E, eps, L, method=args.method)
        failed |= not (rep.upper_holds and rep.lower_holds)
        lines.append(_fmt(rep.to_dict()))
    text = "\n".join(lines) + "\n"
    if args.out is not None:
        args.out.write_text(text)
    else:
        out.write(text)
    return EXIT_PROPERTY if failed else EXIT_OK


def _cmd_kneser(args, out) -> int:
    curve = asy.counting_curve(_potential(args.potential), _grid(args), _count_opts(args))
    if args.window < 2:
        raise UsageError("--window must be >= 2")
    out.write(asy.classify_curve(curve, args.window).value + "\n")
    return _strict_status(args, [e.result for e in curve.entries])


def _cmd_box(args, out) -> int:
    try:
        res = asy.explicit_box_count(args.energy, args.eps, args.c, method=args.method)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out.write(_fmt(res.to_dict()) + "\n")
    return EXIT_OK


def _cmd_hypothesis(args, out) -> int:
    try:
        cutoffs = [int(float(x)) for x in args.cutoffs.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad --cutoffs {args.cutoffs!r}") from None
    if not cutoffs or min(cutoffs) < 1:
        raise UsageError("--cutoffs must be positive integers")
    potential = _potential(args.potential)
    out.write("cutoff,weight\n")
    for n in sorted(set(cutoffs)):
        out.write(f"{n},{format(hypothesis_weight(potential, n), '.17g')}\n")
    return EXIT_OK


COMMANDS = {
    "count": _cmd_count,
    "curve": _cmd_curve,
    "slope": _cmd_slope,
    "nodes": _cmd_nodes,
    "verify-lemma": _cmd_verify_lemma,
    "kneser": _cmd_kneser,
    "box": _cmd_box,
    "hypothesis": _cmd_hypothesis,
}


def run(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    """Parse ``argv``, dispatch, and return the exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(_apply_config(parser, argv))
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        err.write(f"{exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


def main() -> None:
    sys.exit(run())
