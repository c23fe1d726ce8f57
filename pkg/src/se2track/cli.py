"""Command line: ``se2track run | verify | examples``.

Exit codes: 0 success, 1 invalid scenario or arguments, 2 numerical
divergence, 3 a ``verify`` check that did not pass.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import kernel
from .scenario import ParseError, ValidationError, load_scenario, parse_scenario, shipped_path, shipped_scenarios
from .simulate import METRICS, NumericalDivergence, run

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_DIVERGED = 2
EXIT_CHECK_FAILED = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="se2track", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="simulate a scenario and write its CSV log")
    r.add_argument("scenario")
    r.add_argument("--out", type=Path, help="directory for the CSV (default: scenario 'output' or cwd)")
    r.add_argument("--dt", type=_positive)
    r.add_argument("--duration", type=_positive)
    r.add_argument("--seed", type=int, help="recorded only; scenario dynamics are deterministic")
    r.add_argument("--backend", choices=sorted(kernel.BACKENDS))

    v = sub.add_parser("verify", help="run a scenario and check one summary metric")
    v.add_argument("scenario")
    v.add_argument("--check", required=True, choices=METRICS)
    v.add_argument("--tol", required=True, type=float)
    v.add_argument("--dt", type=_positive)
    v.add_argument("--duration", type=_positive)
    v.add_argument("--backend", choices=sorted(kernel.BACKENDS))

    sub.add_parser("examples", help="list the bundled example scenarios")
    return p


def _load(args):
    sc = load_scenario(args.scenario)
    if args.dt is not None or args.duration is not None:
        sc = sc.with_overrides(dt=args.dt, duration=args.duration)
    return sc


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.6g}"


def _cmd_run(args) -> int:
    sc = _load(args)
    res = run(sc, args.backend)
    if args.out is not None:
        dest = args.out / f"{sc.name}.csv"
    elif sc.output:
        dest = Path(sc.output)
    else:
        dest = Path(f"{sc.name}.csv")
    dest.parent.mkdir(parents=True, exist_ok=True)
    res.log.write_csv(dest)
    print(f"{sc.name}: {sc.mode}, {sc.num_nodes} nodes, {sc.nsteps} steps of {sc.dt:g} s [{res.backend}]")
    for name in METRICS:
        print(f"  {name} = {_fmt(res.summary[name])}")
    if args.seed is not None:
        print(f"  seed = {args.seed}")
    print(f"wrote {dest}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    sc = _load(args)
    value = run(sc, args.backend).summary[args.check]
    ok = value <= args.tol
    print(f"{sc.name}: {args.check} = {_fmt(value)} {'<=' if ok else '>'} {args.tol:g}: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _cmd_examples(args) -> int:
    for name in shipped_scenarios():
        sc = parse_scenario(shipped_path(name).read_text(), name)
        print(f"{name:16s} {sc.mode:10s} T={sc.duration:g}s dt={sc.dt:g} nodes={sc.num_nodes}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "verify": _cmd_verify, "examples": _cmd_examples}[args.command]
    try:
        return handler(args)
    except (ParseError, ValidationError) as exc:
        print(f"se2track: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalDivergence as exc:
        print(f"se2track: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
