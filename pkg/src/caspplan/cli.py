"""Command line entry point: ``caspplan plan``, ``caspplan validate`` and ``caspplan bench``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .bench.domains import FAMILIES
from .bench.harness import BenchConfig, render_table, run_harness, write_results
from .driver import DEFAULT_MAX_STEPS, DEFAULT_TIMEOUT, PlannerConfig, parse_heuristic, plan
from .numeric.network import DEFAULT_TOL
from .pddl import PddlError, load
from .validator import DEFAULT_EPS, MalformedPlan, format_plan, parse_plan, simulate

EXIT_PLAN = 0
EXIT_NO_PLAN = 1
EXIT_EXHAUSTED = 2
EXIT_INPUT = 3

EXIT_CODES = {"plan": EXIT_PLAN, "no-plan-at-bound": EXIT_NO_PLAN,
              "resource-exhausted": EXIT_EXHAUSTED}


def _positive(kind):
    def conv(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text}")
        return v
    return conv


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text}")
    return v


def _scale_range(text):
    lo, sep, hi = text.partition("..")
    try:
        a = int(lo)
        b = int(hi) if sep else a
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a..b, got {text!r}") from None
    if a < 1 or b < a:
        raise argparse.ArgumentTypeError(f"bad scale range {text!r}")
    return range(a, b + 1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="caspplan", description="PDDL+ planning through CASP.")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="find a plan for a domain/problem pair")
    p.add_argument("domain")
    p.add_argument("problem")
    hz = p.add_mutually_exclusive_group()
    hz.add_argument("--max-steps", type=_nonneg_int, default=DEFAULT_MAX_STEPS,
                    help="iterative deepening bound (default %(default)s)")
    hz.add_argument("--fixed-step", type=_nonneg_int, help="search this horizon only")
    p.add_argument("--eps", type=_positive(float), default=DEFAULT_EPS)
    p.add_argument("--granularity", type=_positive(float))
    p.add_argument("--tol", type=_positive(float), default=DEFAULT_TOL)
    p.add_argument("--timeout", type=_positive(float), default=DEFAULT_TIMEOUT)
    p.add_argument("--emit-casp", metavar="FILE", help="write the encoded program")
    p.add_argument("--heuristic", action="append", default=[], metavar="KEY=VAL",
                   help="force=<happening>@<step>, e.g. force=start(generate)@0")
    p.add_argument("--plan-out", metavar="FILE")
    p.add_argument("--report-json", metavar="FILE")
    p.add_argument("--stats", action="store_true", help="print statistics as JSON on stderr")

    v = sub.add_parser("validate", help="simulate a plan file against a domain/problem pair")
    v.add_argument("domain")
    v.add_argument("problem")
    v.add_argument("plan")
    v.add_argument("--granularity", type=_positive(float))
    v.add_argument("--tol", type=_positive(float), default=DEFAULT_TOL)
    v.add_argument("--report-json", metavar="FILE")

    b = sub.add_parser("bench", help="run the benchmark families")
    b.add_argument("--family", action="append", default=[], choices=FAMILIES,
                   help="repeatable; all families when omitted")
    b.add_argument("--scale", type=_scale_range, default=range(1, 9), metavar="a..b")
    b.add_argument("--protocol", choices=("fixed", "cumulative"), default="fixed")
    b.add_argument("--timeout", type=_positive(float), default=DEFAULT_TIMEOUT)
    b.add_argument("--jobs", type=_positive(int), default=1)
    b.add_argument("--out", metavar="FILE", help="JSON results")
    b.add_argument("--plans-dir", metavar="DIR", help="write one plan file per solved instance")
    return ap


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def cmd_plan(args) -> int:
    try:
        forced = tuple(parse_heuristic(h) for h in args.heuristic)
        g = load(args.domain, args.problem)
        cfg = PlannerConfig(max_steps=args.max_steps, fixed_step=args.fixed_step, eps=args.eps,
                            granularity=args.granularity, tol=args.tol, timeout=args.timeout,
                            forced=forced, emit_casp=args.emit_casp)
    except (PddlError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    res = plan(g, cfg)
    if res.found:
        text = format_plan(res.plan)
        sys.stdout.write(text)
        if args.plan_out:
            _write(args.plan_out, text)
    else:
        print(f"; {res.status}", file=sys.stderr)
    if args.report_json:
        doc = res.to_json()
        doc["validation"] = res.report.to_json() if res.report else None
        _write(args.report_json, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    if args.stats:
        print(json.dumps(res.to_json()["stats"], indent=2, sort_keys=True), file=sys.stderr)
    return EXIT_CODES[res.status]


def cmd_validate(args) -> int:
    try:
        g = load(args.domain, args.problem)
        with open(args.plan, encoding="utf-8") as fh:
            p = parse_plan(fh.read())
        report = simulate(g, p, args.granularity, args.tol)
    except (PddlError, OSError, ValueError, MalformedPlan) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print("valid" if report.valid else f"invalid: {report.description}")
    if args.report_json:
        _write(args.report_json, json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    return 0 if report.valid else 1


def cmd_bench(args) -> int:
    bc = BenchConfig(protocol=args.protocol, timeout=args.timeout, jobs=args.jobs)
    families = args.family or list(FAMILIES)
    rows = run_harness(families, args.scale, bc)
    sys.stdout.write(render_table(rows))
    if args.out:
        write_results(rows, bc, args.out, args.plans_dir)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "plan":
        return cmd_plan(args)
    if args.command == "validate":
        return cmd_validate(args)
    return cmd_bench(args)


if __name__ == "__main__":
    sys.exit(main())
