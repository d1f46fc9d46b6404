"""Trace replay and certification.

A verification re-derives every state of a run from its config snapshot,
demands bit-exact agreement with the recorded steps, and then re-checks the
run's inequalities independently of the construction code paths: correction
sizes, vanishing at nodes, prefix stability, injectivity and coverage,
monotonicity and endpoint fixing, avoidance witnesses, and the mode-specific
ledgers.  Check outcomes are data (a report); only unparseable or
non-reproducing traces raise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from gmpy2 import mpq, mpz

from .avoid import AvoidFamily, lft_eval, lft_inverse
from .basic import run_basic
from .enclosure import pi_enclosure, sqrt_enclosure
from .errors import ParseError, ReplayDivergence
from .heights import HeightSchedule, check_height_ledger, run_heights
from .pila import SlowFunction, count_at_least, node_product, run_pila
from .poly import Poly, unit_increasing_lower_bound
from .ratcore import (Rat, Verdict, farey_count, height_H, iter_unit_rationals,
                      lex_enumerate, parse_rat, rat_str, totient_prefix)
from .trace import Trace

# Full quadratic vanishing/stability sweeps are limited to shallow runs;
# deeper runs keep the per-step replay checks plus the final-stage sweep.
FULL_SWEEP_DEPTH = 24


@dataclass
class CheckEntry:
    check: str
    location: str
    verdict: Verdict
    note: str = ""

    def to_json(self) -> dict:
        return {"check": self.check, "location": self.location,
                "verdict": self.verdict.value, "note": self.note}


@dataclass
class VerifyReport:
    entries: list = field(default_factory=list)

    def add(self, check: str, location: str, ok, note: str = "") -> None:
        if isinstance(ok, Verdict):
            verdict = ok
        else:
            verdict = Verdict.PASS if ok else Verdict.FAIL
        self.entries.append(CheckEntry(check, location, verdict, note))

    @property
    def all_pass(self) -> bool:
        return all(e.verdict is Verdict.PASS for e in self.entries)

    def failures(self) -> list:
        return [e for e in self.entries if e.verdict is not Verdict.PASS]

    def counts(self) -> dict:
        out = {"pass": 0, "fail": 0, "marginal": 0}
        for e in self.entries:
            out[e.verdict.value] += 1
        return out

    def to_json(self) -> dict:
        return {"all_pass": self.all_pass, "counts": self.counts(),
                "entries": [e.to_json() for e in self.entries]}

    def summary(self) -> str:
        c = self.counts()
        status = "PASS" if self.all_pass else "FAIL"
        return (f"{status}: {c['pass']} passed, {c['fail']} failed, "
                f"{c['marginal']} marginal")


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------

def _rerun_from_config(trace: Trace) -> Trace:
    config = trace.config
    try:
        mode = config["mode"]
        avoid = AvoidFamily.from_json(config["avoid"])
        if config.get("y_enum", "lex") != "lex" or config.get("x_enum") != "lex":
            raise ParseError("only lexicographic-enumeration traces replay")
        if mode == "basic":
            _, fresh = run_basic(config["depth"], avoid)
        elif mode == "heights":
            schedule = HeightSchedule.from_descriptor(config["schedule"])
            _, fresh, _ = run_heights(config["depth"], schedule, avoid,
                                      budget=config["exponent_budget"])
        elif mode == "pila":
            slow = SlowFunction(parse_rat(config["slow"]["c"]),
                                config["slow"]["k"])
            _, fresh = run_pila(config["stages"], slow, avoid)
        else:
            raise ParseError(f"unknown mode {mode!r}")
    except (KeyError, TypeError) as exc:
        raise ParseError(f"trace config incomplete: {exc}") from exc
    return fresh


def _compare_step_lists(recorded: list, fresh: list, kind: str) -> None:
    for i, (a, b) in enumerate(zip(recorded, fresh)):
        if a != b:
            fields = sorted(set(a) | set(b))
            for name in fields:
                if a.get(name) != b.get(name):
                    raise ReplayDivergence(i, f"{kind}[{i}].{name}",
                                           b.get(name), a.get(name))
    if len(recorded) != len(fresh):
        raise ReplayDivergence(min(len(recorded), len(fresh)), f"{kind} length",
                               len(fresh), len(recorded))


def replay_check(trace: Trace) -> None:
    """Re-run the construction and require bit-exact agreement; raises."""
    fresh = _rerun_from_config(trace)
    if trace.mode == "pila":
        _compare_step_lists(trace.stages, fresh.stages, "stage")
    else:
        _compare_step_lists([s.to_json() for s in trace.steps],
                            [s.to_json() for s in fresh.steps], "step")
        if (trace.seed_repair or {}) != (fresh.seed_repair or {}):
            raise ReplayDivergence(0, "seed_repair", fresh.seed_repair,
                                   trace.seed_repair)


# ---------------------------------------------------------------------------
# Construction-trace checks (basic and heights modes)
# ---------------------------------------------------------------------------

def _check_construction(trace: Trace, report: VerifyReport) -> None:
    nodes = trace.nodes_in_order()
    values = [mpq(0), mpq(1)] + [rec.value for rec in trace.steps]
    eps = trace.eps_sequence()
    depth = trace.depth()

    report.add("eps-seed", "stages 1-2", eps[0] == 1 and eps[1] == 0,
               "eps_1 = 1, eps_2 = 0")
    ok = all(abs(eps[n - 1]) <= mpq(1, mpz(4) ** (n - 1))
             for n in range(3, depth + 1))
    strict_even = all(abs(rec.eps) < mpq(1, mpz(4) ** (rec.m - 1))
                      for rec in trace.steps if rec.kind == "even")
    report.add("eps-discipline", f"stages 3..{depth}", ok and strict_even,
               "|eps_n| <= 4^(1-n), strict at even stages")

    report.add("node-injectivity", "all", len(set(nodes)) == len(nodes))
    report.add("value-injectivity", "all", len(set(values)) == len(values))

    # coverage: after odd stage 2t+1, enumeration points 0..t are all nodes
    t_last = (depth - 1) // 2 if depth % 2 == 1 else (depth - 2) // 2
    node_set = set(nodes)
    cov = all(lex_enumerate(i) in node_set for i in range(t_last + 1))
    report.add("coverage-prefix", f"x_0..x_{t_last}", cov)

    bs = [rec.aux.get("b") for rec in trace.steps if rec.kind == "even"]
    report.add("even-target-indices", "even steps",
               all(x < y for x, y in zip(bs, bs[1:])),
               "least-unassigned index strictly increases")

    analytic = 1 - sum((abs(e) for e in eps[2:]), mpq(0))
    report.add("monotone-analytic", f"stage {depth}", analytic >= mpq(2, 3),
               f"1 - sum|eps| = {rat_str(analytic)} >= 2/3")

    f_final = trace.partial_sum(depth)
    coeff_cert = unit_increasing_lower_bound(f_final)
    report.add("monotone-coefficient", f"stage {depth}", coeff_cert > 0,
               "coefficient-sum lower bound for the derivative is positive")
    report.add("endpoints", f"stage {depth}",
               f_final.coeff(0) == 0 and f_final.eval(1) == 1,
               "f(0) = 0 and f(1) = 1 exactly")

    sweep_to = depth if depth <= FULL_SWEEP_DEPTH else 0
    if sweep_to:
        ok_vanish = True
        ok_prefix = True
        for n in range(3, sweep_to + 1):
            p_n = trace.correction_term(n)
            f_n = trace.partial_sum(n)
            for k in range(n):
                if p_n.eval(nodes[k]) != 0:
                    ok_vanish = False
            for k in range(n + 1):
                if f_n.eval(nodes[k]) != values[k]:
                    ok_prefix = False
            if f_n.coeff(0) != 0 or f_n.eval(1) != 1:
                ok_prefix = False
        report.add("correction-vanishing", f"stages 3..{sweep_to}", ok_vanish,
                   "p_n vanishes at all earlier nodes, exactly")
        report.add("prefix-stability", f"stages 3..{sweep_to}", ok_prefix,
                   "f_n reproduces every pinned pair, exactly")
    else:
        ok_final = all(f_final.eval(nodes[k]) == values[k]
                       for k in range(len(nodes)))
        report.add("prefix-stability", f"stage {depth} (final sweep)", ok_final)

    family = AvoidFamily.from_json(trace.config["avoid"])
    ok_avoid = True
    consumed = 0
    for rec in trace.steps:
        w = rec.avoid_witness
        if not w:
            continue
        consumed += 1
        g = family.get(w["g_index"])
        point = parse_rat(w["point"])
        fv, gv = parse_rat(w["f_value"]), parse_rat(w["g_value"])
        if g is None or g.eval(point) != gv or fv == gv:
            ok_avoid = False
        if trace.assigned_value(point) != fv:
            ok_avoid = False
    report.add("avoidance-witnesses", f"{consumed} consumed", ok_avoid,
               "recorded witness values recompute and differ exactly")


def _check_heights(trace: Trace, report: VerifyReport) -> None:
    schedule = HeightSchedule.from_descriptor(trace.config["schedule"])
    ledger = check_height_ledger(trace, schedule)
    for entry in ledger.entries:
        report.entries.append(CheckEntry("ledger:" + entry.check,
                                         entry.location, entry.verdict,
                                         entry.note))


# ---------------------------------------------------------------------------
# Pila-trace checks
# ---------------------------------------------------------------------------

def _check_pila(trace: Trace, report: VerifyReport) -> None:
    records = trace.stages
    family = AvoidFamily.from_json(trace.config["avoid"]).increasing_subfamily()
    slow = SlowFunction(parse_rat(trace.config["slow"]["c"]),
                        trace.config["slow"]["k"])

    Ts = [rec["T"] for rec in records]
    ok_T = all(Ts[n] >= Ts[n - 1] + n for n in range(1, len(Ts)))
    report.add("threshold-growth", "stages", ok_T, "T_n >= T_(n-1) + n")

    f = Poly.identity()
    polys = [f]
    ok_eps = True
    for rec in records:
        eps = parse_rat(rec["eps"])
        if eps != 0:
            members = list(iter_unit_rationals(rec["T"]))
            members.extend(parse_rat(r2["z"]) for r2 in records[:rec["n"]]
                           if height_H(parse_rat(r2["z"])) > rec["T"])
            f = f + eps * node_product(members)
        polys.append(f)
    # eps bound: only materializable sizes can have nonzero eps
    for rec in records:
        eps = parse_rat(rec["eps"])
        if eps == 0:
            continue
        q_size = rec["q_size"]
        if abs(eps) > mpq(1, q_size * mpz(4) ** (q_size + 1)):
            ok_eps = False
    report.add("eps-bounds", "stages", ok_eps,
               "|eps_n| <= 4^-(|Q_n|+1) / |Q_n| whenever nonzero")

    f_final = polys[-1]
    zs = [parse_rat(rec["z"]) for rec in records]
    ok_surj = all(f_final.eval(z) == lex_enumerate(i) for i, z in enumerate(zs))
    report.add("surjectivity-thread", f"{len(zs)} targets", ok_surj,
               "f(z_n) = y_n exactly for every stage")
    report.add("z-injectivity", "stages", len(set(zs)) == len(zs))

    ok_freeze = True
    for n, rec in enumerate(records):
        count = 0
        for q in iter_unit_rationals(rec["T"]):
            if polys[n + 1].eval(q) != f_final.eval(q):
                ok_freeze = False
            count += 1
            if count >= 100:
                break
    report.add("freeze-spot-check", "100 points per stage", ok_freeze,
               "later stages agree exactly below each threshold")

    ok_count = True
    for rec in records:
        got = count_at_least(f_final, rec["T"], rec["cf_threshold"])
        if got < rec["cf_threshold"]:
            ok_count = False
    report.add("counting-demand", "all stages", ok_count,
               "count of bounded-height graph points meets ceil(s_upper(T_n))")

    ok_guarantee = True
    for n, rec in enumerate(records):
        b, d = mpz(rec["b"]), rec["d"]
        for q in iter_unit_rationals(30):
            if height_H(polys[n].eval(q)) > b * height_H(q) ** d:
                ok_guarantee = False
    report.add("height-certificate", "H <= 30 sweep", ok_guarantee,
               "H(f_n(q)) <= b_n H(q)^d_n on every tested point")

    ok_avoid = True
    for rec in records:
        w = rec["avoid_witness"]
        if not w:
            continue
        g = family.get(w["g_index"])
        point = parse_rat(w["point"])
        if g is None or g.eval(point) != parse_rat(w["g_value"]):
            ok_avoid = False
        if parse_rat(w["f_value"]) == parse_rat(w["g_value"]):
            ok_avoid = False
        if f_final.eval(point) != parse_rat(w["f_value"]):
            ok_avoid = False
    report.add("avoidance-witnesses", "stages", ok_avoid)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def verify_trace(trace: Trace, replay: bool = True) -> VerifyReport:
    """Replay (optional) and certify a trace; returns the check report.

    Raises ParseError for malformed inputs and ReplayDivergence when the
    deterministic re-run does not reproduce the records bit for bit; all
    other findings are entries in the returned report.
    """
    report = VerifyReport()
    if replay:
        replay_check(trace)
        report.add("replay", "whole trace", True, "bit-exact reproduction")
    if trace.mode in ("basic", "heights"):
        _check_construction(trace, report)
        if trace.mode == "heights":
            _check_heights(trace, report)
    elif trace.mode == "pila":
        _check_pila(trace, report)
    else:
        raise ParseError(f"unknown trace mode {trace.mode!r}")
    return report


# ---------------------------------------------------------------------------
# Degree-one baseline maps
# ---------------------------------------------------------------------------

def lft_bijection_check(a, family: str, sample_H: int) -> bool:
    """Exhaustive small-height check that the map is a bijection of Q∩[0,1].

    Verifies rational images inside [0,1], injectivity on the sample, and the
    closed-form inverse round trip.
    """
    inv = lft_inverse(a, family)
    seen = set()
    for q in iter_unit_rationals(sample_H):
        v = lft_eval(a, q, family)
        if not 0 <= v <= 1:
            return False
        if v in seen:
            return False
        seen.add(v)
        if inv.eval(v) != q:
            return False
    return True


# ---------------------------------------------------------------------------
# Enumeration asymptotics
# ---------------------------------------------------------------------------

def asymptotic_suite(n_max: int) -> dict:
    """Exact index-growth scan plus the soundly rounded density check.

    Scan: H(x_n)^2 >= 2n for all 2 <= n <= n_max, checked exactly (within
    one height level the left side is constant and the right side peaks at
    the block end, so block ends decide the whole range).  Density: the
    ratio H(x_{n_max}) * sqrt(3) / (pi * sqrt(n_max)) lies within 2% of 1,
    certified with outward-rounded enclosures.
    """
    if n_max < 10:
        raise ValueError("n_max must be >= 10")
    scan_ok = True
    count = 2  # indices 0 and 1 hold the height-1 points
    H_at = None
    k = 1
    while count <= n_max:
        k += 1
        block = totient_prefix(k) - totient_prefix(k - 1)
        if block == 0:
            continue
        first, last = count, count + block - 1
        count += block
        end = min(last, n_max)
        if end >= max(first, 2) and k * k < 2 * end:
            scan_ok = False
        if first <= n_max <= last:
            H_at = k
    pi_lo, pi_hi = pi_enclosure()
    s3_lo, s3_hi = sqrt_enclosure(3)
    sn_lo, sn_hi = sqrt_enclosure(n_max)
    upper_ok = H_at * s3_hi < mpq(102, 100) * pi_lo * sn_lo
    lower_ok = H_at * s3_lo > mpq(98, 100) * pi_hi * sn_hi
    return {
        "n_max": n_max,
        "index_growth_pass": scan_ok,
        "H_at_n_max": int(H_at),
        "asymptotic_pass": bool(upper_ok and lower_ok),
        "ratio_within": "2%",
    }
