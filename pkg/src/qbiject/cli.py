"""Command-line surface: construct, verify, eval, count, enumerate, export.

Runs are seedless and fully determined by their flags; summaries print
magnitudes as digit counts, never as floating logarithms.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import gmpy2
from gmpy2 import mpq

from .avoid import AvoidFamily, default_family
from .basic import run_basic
from .errors import ParseError, QbijectError, ReplayDivergence
from .heights import HeightSchedule, exponent_budget_default, run_heights
from .pila import SlowFunction, run_pila
from .poly import eval_enclosure
from .ratcore import (farey_count, height_H, lex_enumerate, lex_key,
                      parse_rat, rat_str)
from .trace import Trace
from .verify import asymptotic_suite, verify_trace


def _digits(x) -> int:
    return int(gmpy2.num_digits(gmpy2.mpz(x), 10))


def _load_avoid(path: str | None) -> AvoidFamily:
    return default_family() if path is None else AvoidFamily.load(path)


def _parse_slow(text: str) -> SlowFunction:
    try:
        c, k = text.split(",")
        return SlowFunction(parse_rat(c), int(k))
    except ValueError as exc:
        raise ParseError(f"--slow expects 'c,k' (e.g. '2,1'): {exc}") from exc


def cmd_construct(args) -> int:
    avoid = _load_avoid(args.avoid)
    budget = args.exponent_budget or exponent_budget_default()
    if args.mode == "basic":
        if args.depth is None:
            raise ParseError("--depth is required for basic mode")
        state, trace = run_basic(args.depth, avoid)
    elif args.mode == "heights":
        if args.depth is None:
            raise ParseError("--depth is required for heights mode")
        schedule = (HeightSchedule.strict() if args.schedule == "strict"
                    else HeightSchedule.scaled(args.scale_c))
        state, trace, ledger = run_heights(args.depth, schedule, avoid,
                                           budget=budget)
        print(f"height ledger: {ledger.counts()}")
        if schedule.kind == "strict":
            next_even = args.depth + 1 if args.depth % 2 == 1 else args.depth + 2
            exponent = schedule.majorant_exponent(next_even - 1)
            if exponent > budget:
                print(f"note: depth {next_even} would need grid exponent "
                      f"{exponent} > budget {budget} and would be refused")
    else:
        if args.stages is None:
            raise ParseError("--stages is required for pila mode")
        slow = _parse_slow(args.slow)
        state, trace = run_pila(args.stages, slow, avoid)
    out = Path(args.out) if args.out else Path(f"{args.mode}.trace.json")
    trace.save(out)
    if trace.mode == "pila":
        print(f"stages: {len(trace.stages)}")
        for rec in trace.stages:
            print(f"  n={rec['n']} T={rec['T']} case={rec['case']} "
                  f"count>={rec['cf_verified_at_least']} "
                  f"(demand {rec['cf_threshold']})")
    else:
        pairs = trace.node_value_pairs()
        max_den = max(q.denominator for _, q in pairs)
        max_node = max(height_H(q) for q, _ in pairs)
        print(f"steps: {len(trace.steps)} (depth {trace.depth()}), "
              f"assigned pairs: {len(pairs)}")
        print(f"largest value denominator: {_digits(max_den)} digits; "
              f"largest node height: {_digits(max_node)} digits")
    print(f"trace written to {out}")
    return 0


def cmd_verify(args) -> int:
    trace = Trace.load(args.trace)
    try:
        report = verify_trace(trace, replay=not args.no_replay)
    except ReplayDivergence as exc:
        print(f"replay divergence: {exc}", file=sys.stderr)
        return 3
    if args.report:
        Path(args.report).write_text(
            json.dumps(report.to_json(), sort_keys=True, indent=1) + "\n")
    print(report.summary())
    for entry in report.failures():
        print(f"  {entry.verdict.value}: {entry.check} @ {entry.location} "
              f"{entry.note}")
    return 0 if report.all_pass else 1


def cmd_eval(args) -> int:
    trace = Trace.load(args.trace)
    q = parse_rat(args.q)
    if not 0 <= q <= 1:
        raise ParseError(f"point {rat_str(q)} outside [0,1]")
    exact = trace.assigned_value(q)
    if exact is not None:
        print(json.dumps({"q": rat_str(q), "kind": "exact",
                          "value": rat_str(exact)}))
        return 0
    if trace.mode == "pila":
        raise ParseError("enclosures need a basic/heights trace")
    n = args.n if args.n is not None else trace.depth()
    f_n = trace.partial_sum(n)
    lo, hi = eval_enclosure(f_n, n, q)
    print(json.dumps({"q": rat_str(q), "kind": "enclosure", "n": n,
                      "lo": rat_str(lo), "hi": rat_str(hi)}))
    return 0


def cmd_export(args) -> int:
    trace = Trace.load(args.trace)
    out = Path(args.out)
    if args.format == "json":
        out.write_text(trace.dumps())
        print(f"JSON copy written to {out}")
        return 0
    pairs = sorted(trace.node_value_pairs(), key=lambda p: lex_key(p[0]))
    if args.points is not None:
        if args.points > len(pairs):
            print(f"note: only {len(pairs)} assigned points available")
        pairs = pairs[: args.points]
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "f_x"])
        for x, fx in pairs:
            writer.writerow([rat_str(x), rat_str(fx)])
    print(f"{len(pairs)} points written to {out}")
    return 0


def cmd_count(args) -> int:
    if args.what == "farey":
        print(farey_count(args.K))
        return 0
    trace = Trace.load(args.trace)
    if trace.mode != "pila":
        raise ParseError("graph-point counts need a pila trace")
    last_T = trace.stages[-1]["T"]
    if args.T > last_T:
        raise ParseError(f"T={args.T} exceeds the last frozen threshold {last_T}")
    # rebuild the final polynomial from the stage records
    from .pila import node_product  # local import to keep module load light
    from .ratcore import iter_unit_rationals
    from .poly import Poly
    f = Poly.identity()
    for rec in trace.stages:
        eps = parse_rat(rec["eps"])
        if eps != 0:
            members = list(iter_unit_rationals(rec["T"]))
            members.extend(parse_rat(r2["z"]) for r2 in trace.stages[:rec["n"]]
                           if height_H(parse_rat(r2["z"])) > rec["T"])
            f = f + eps * node_product(members)
    count = 0
    for q in iter_unit_rationals(args.T):
        if height_H(f.eval(q)) <= args.T:
            count += 1
    print(count)
    return 0


def cmd_enumerate(args) -> int:
    upto = args.upto if args.upto is not None else args.n
    start = 0 if args.upto is not None else args.n
    for i in range(start, upto + 1):
        print(f"{i}\t{rat_str(lex_enumerate(i))}")
    return 0


def cmd_scan(args) -> int:
    result = asymptotic_suite(args.n_max)
    print(json.dumps(result, sort_keys=True))
    return 0 if result["index_growth_pass"] and result["asymptotic_pass"] else 1


def cmd_avoid_defaults(args) -> int:
    default_family().save(args.out)
    print(f"default avoid family written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbiject",
        description="Exact construction and verification of increasing maps "
                    "that restrict to bijections of the rationals in [0,1].")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="run a construction; write its trace")
    p.add_argument("--mode", choices=["basic", "heights", "pila"],
                   required=True)
    p.add_argument("--depth", type=int, help="final stage (basic/heights)")
    p.add_argument("--stages", type=int, help="last stage index (pila)")
    p.add_argument("--schedule", choices=["strict", "scaled"],
                   default="strict")
    p.add_argument("--scale-c", type=int, default=2,
                   help="base for the scaled schedule")
    p.add_argument("--avoid", help="avoid-family JSON (default: built-in)")
    p.add_argument("--slow", default="2,1", help="demand curve 'c,k' (pila)")
    p.add_argument("--exponent-budget", type=int,
                   help=f"grid exponent cap (default env or 2^30)")
    p.add_argument("--out", help="trace output path (.json or .json.gz)")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="replay and certify a trace")
    p.add_argument("trace")
    p.add_argument("--report", help="write the full JSON report here")
    p.add_argument("--no-replay", action="store_true",
                   help="skip the bit-exact re-run; only re-check inequalities")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("eval", help="exact value or enclosure at a point")
    p.add_argument("trace")
    p.add_argument("--q", required=True, help="rational point 'num/den'")
    p.add_argument("--n", type=int, help="stage for the enclosure")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export", help="dump assigned graph points")
    p.add_argument("trace")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--points", type=int, help="keep only the first K points")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("count", help="bounded-height counts")
    p.add_argument("what", choices=["farey", "cf"])
    p.add_argument("--K", type=int, help="height bound (farey)")
    p.add_argument("--trace", help="pila trace (cf)")
    p.add_argument("--T", type=int, help="threshold (cf)")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("enumerate", help="print enumeration entries")
    p.add_argument("--n", type=int, default=0, help="single index")
    p.add_argument("--upto", type=int, help="print indices 0..upto")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("scan", help="index-growth and density checks")
    p.add_argument("--n-max", type=int, default=10**6)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("avoid-defaults", help="write the built-in avoid family")
    p.add_argument("--out", default="lft_defaults.json")
    p.set_defaults(func=cmd_avoid_defaults)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except QbijectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
