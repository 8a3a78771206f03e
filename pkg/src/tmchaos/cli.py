"""Command-line interface: ``tmchaos <command> ...``.

Every JSON report embeds the tool version and the fully resolved
configuration; rationals are written as exact ``num/den`` strings.  The
exit status is 0 whenever the command completes, whatever the verdict.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

from . import __version__
from .ensemble import EnsembleConfig, report_csv, run_ensemble
from .fractal import (accept_set, box_dimension, cantor_prefractal, evaluate,
                      geometric_scales, load_tree)
from .learning import BUILTINS, iterate, limit_report, load_functional
from .machine import MachineError, load_machine, run
from .orbits import (DEFAULT_EPS, DEFAULT_HORIZON, DEFAULT_TAIL, classify,
                     detect_sensitivity, measure, measure_monte_carlo, orbit_of)
from .rationalize import format_rational, parse_rational, rational_report


class UsageError(Exception):
    pass


def corpus_path(name: str) -> Path:
    """A file path, or the name of a bundled corpus file (extension optional)."""
    p = Path(name)
    if p.exists():
        return p
    data = resources.files("tmchaos") / "data"
    for candidate in (name, name + ".tm", name + ".json"):
        entry = data / candidate
        if entry.is_file():
            return Path(str(entry))
    raise UsageError(f"no such file or bundled corpus entry: {name}")


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _box(text: str) -> tuple[Fraction, Fraction]:
    lo, sep, hi = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(f"box {text!r} must look like lo:hi")
    return _rational(lo), _rational(hi)


def _jsonable(v):
    if isinstance(v, Fraction):
        return format_rational(v)
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _config(args: argparse.Namespace) -> dict:
    return {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in ("func", "out")}


def _envelope(args: argparse.Namespace, body: dict) -> dict:
    return {"tool": {"name": "tmchaos", "version": __version__},
            "command": args.command, "config": _config(args), **body}


def _series_csv(values) -> str:
    lines = ["step,value"]
    lines += [f"{t},{format(float(v), '.17g')}" for t, v in enumerate(values)]
    return "\n".join(lines) + "\n"


def _require_json(args) -> None:
    if args.format != "json":
        raise UsageError(f"{args.command} supports --format json only")


def _chaos_dict(v) -> dict:
    d = {"kind": v.kind, "eps": format_rational(v.eps)}
    if v.witness is not None:
        d["witness"] = list(v.witness)
        d["divergence_step"] = v.divergence_step
    if v.order_breaks:
        d["order_breaks"] = list(v.order_breaks)
    if v.reason:
        d["reason"] = v.reason
    return d


def _chaos_or_reason(orbit, args, start, profile) -> dict:
    try:
        return _chaos_dict(detect_sensitivity(orbit, args.eps, args.horizon, start=start, profile=profile))
    except ValueError as exc:
        return {"kind": "inconclusive", "eps": format_rational(args.eps), "reason": str(exc)}


###############################################################################
# commands
###############################################################################


def cmd_run(args) -> str:
    _require_json(args)
    machine = load_machine(corpus_path(args.machine))
    outcome = run(machine, args.input, args.fuel, detect_loops=args.loops)
    return _dump(_envelope(args, {"outcome": outcome.to_dict()}))


def cmd_orbit(args) -> str:
    machine = load_machine(corpus_path(args.machine))
    orbit = orbit_of(machine, args.input, args.fuel)
    if args.format == "csv":
        return _series_csv(orbit.values)
    cls = classify(orbit, args.eps, args.tail)
    body: dict = {"values": [format_rational(v) for v in orbit.values],
                  "truncated": orbit.truncated,
                  "class": {"kind": cls.kind}}
    if orbit.outcome:
        body["outcome"] = orbit.outcome
    if cls.preperiod is not None:
        body["class"].update(preperiod=cls.preperiod, period=cls.period)
    if cls.limit_estimate is not None:
        body["class"]["limit_estimate"] = rational_report(cls.limit_estimate)
    if cls.reason:
        body["class"]["reason"] = cls.reason
    if cls.profile is not None:
        body["profile"] = {
            "accumulation_points": [rational_report(a) for a in cls.profile.accumulation_points],
            "tail_start": cls.profile.tail_start,
            "visit_pattern": list(cls.profile.visit_pattern),
        }
    if orbit.period is not None:
        # the stored cycle is unrolled so the scan sees the periodic tail
        unrolled = orbit.unrolled(max(len(orbit), 2 * args.horizon + sum(orbit.period)))
        body["chaos"] = _chaos_or_reason(unrolled, args, orbit.period[0], None)
    elif orbit.truncated:
        body["chaos"] = _chaos_or_reason(orbit, args, 0, cls.profile)
        body["tail_chaos"] = _chaos_or_reason(orbit, args, orbit.tail_start(args.tail), cls.profile)
    else:
        body["chaos"] = {"kind": "not_applicable", "reason": "run halted"}
    return _dump(_envelope(args, body))


def cmd_ensemble(args) -> str:
    config = EnsembleConfig(args.count, args.states, args.alphabet, args.fuel, args.input,
                            args.eps, args.tail, args.horizon, args.seed)
    report = run_ensemble(config, workers=args.workers)
    if args.format == "csv":
        return report_csv(report)
    report["command"] = args.command
    return _dump(report)


def cmd_cantor(args) -> str:
    _require_json(args)
    c = cantor_prefractal(args.depth)
    body = {"intervals": c.to_json(), "count": len(c),
            "total_length": rational_report(c.total_length())}
    if args.dimension:
        if args.depth < 2:
            raise UsageError("--dimension needs --depth >= 2")
        dim = box_dimension(c, geometric_scales(3, 1, args.depth))
        body["dimension"] = {"slope": format(dim.slope, ".17g"),
                             "scales": [format_rational(e) for e in dim.scales],
                             "counts": list(dim.counts)}
    return _dump(_envelope(args, body))


def cmd_tree(args) -> str:
    _require_json(args)
    tree = load_tree(corpus_path(args.tree))
    acc = accept_set(tree, args.depth)
    body: dict = {"accept_set": acc.to_json(), "count": len(acc),
                  "total_length": rational_report(acc.total_length())}
    if args.eval:
        body["evaluations"] = []
        for x in args.eval:
            e = evaluate(tree, x, args.depth)
            body["evaluations"].append({"x": format_rational(x), "accepted": e.accepted,
                                        "truncated": e.truncated, "depth": e.depth})
    return _dump(_envelope(args, body))


def cmd_measure(args) -> str:
    _require_json(args)
    body: dict = {"measure": rational_report(measure(args.boxes))}
    if args.mc:
        body["monte_carlo"] = {"samples": args.mc,
                               "estimate": format(measure_monte_carlo(args.boxes, args.mc, args.seed), ".17g")}
    return _dump(_envelope(args, body))


def cmd_learn(args) -> str:
    if args.functional in BUILTINS and not Path(args.functional).exists():
        functional = BUILTINS[args.functional]
    else:
        functional = load_functional(corpus_path(args.functional))
    code_orbit = iterate(functional, args.seed_code, args.steps)
    if args.format == "csv":
        return _series_csv(code_orbit.orbit.values)
    report = limit_report(code_orbit, args.eps, args.tail, args.horizon)
    report["values"] = [format_rational(v) for v in code_orbit.orbit.values]
    report["decoded_lengths"] = list(code_orbit.decoded_lengths)
    return _dump(_envelope(args, report))


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


###############################################################################
# parser
###############################################################################


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tmchaos", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tmchaos {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json", help="output format (default json)")
    common.add_argument("--out", type=Path, help="write the report here instead of stdout")
    analysis = argparse.ArgumentParser(add_help=False)
    analysis.add_argument("--eps", type=_rational, default=DEFAULT_EPS, help="tolerance, e.g. 1/50 (default)")
    analysis.add_argument("--tail", type=_rational, default=DEFAULT_TAIL, help="tail fraction (default 1/2)")
    analysis.add_argument("--horizon", type=int, default=DEFAULT_HORIZON, help="divergence horizon (default 8)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run a machine")
    p.add_argument("machine", help="machine file or bundled name")
    p.add_argument("--input", default="", help="input word (default empty)")
    p.add_argument("--fuel", type=int, default=10_000, help="step budget (default 10000)")
    p.add_argument("--loops", action=argparse.BooleanOptionalAction, default=True,
                   help="detect repeated configurations (default on)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("orbit", parents=[common, analysis], help="orbit, class and chaos verdict")
    p.add_argument("machine")
    p.add_argument("--input", default="")
    p.add_argument("--fuel", type=int, default=1000, help="step budget (default 1000)")
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("ensemble", parents=[common, analysis], help="random-machine experiment")
    p.add_argument("--count", type=int, default=100, help="machines (default 100)")
    p.add_argument("--states", type=int, default=4, help="running states (default 4)")
    p.add_argument("--alphabet", type=int, default=2, help="tape symbols incl. blank (default 2)")
    p.add_argument("--fuel", type=int, default=5000, help="step budget (default 5000)")
    p.add_argument("--input", default="")
    p.add_argument("--seed", type=int, default=0, help="u64 seed (default 0)")
    p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("cantor", parents=[common], help="Cantor pre-fractal")
    p.add_argument("--depth", type=int, default=3, help="level m (default 3)")
    p.add_argument("--dimension", action="store_true", help="add a box-counting estimate")
    p.set_defaults(func=cmd_cantor)

    p = sub.add_parser("tree", parents=[common], help="accept set of a decision tree template")
    p.add_argument("tree", help="template file or bundled name")
    p.add_argument("--depth", type=int, default=3, help="decider evaluations (default 3)")
    p.add_argument("--eval", type=_rational, nargs="*", default=[], help="points to evaluate")
    p.set_defaults(func=cmd_tree)

    p = sub.add_parser("measure", parents=[common], help="ordered-region measure of boxes")
    p.add_argument("boxes", type=_box, nargs="+", help="boxes as lo:hi")
    p.add_argument("--mc", type=int, default=0, help="Monte Carlo samples (default off)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("learn", parents=[common, analysis], help="learning iteration")
    p.add_argument("functional", help="builtin name, JSON file or bundled name")
    p.add_argument("--seed-code", default="1", help="seed word over 0,1,# (default 1)")
    p.add_argument("--steps", type=int, default=40, help="iterations (default 40)")
    p.set_defaults(func=cmd_learn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = args.func(args)
    except (UsageError, MachineError, ValueError, OSError) as exc:
        print(f"tmchaos {args.command}: error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
