"""Height-budgeted construction: growth schedules, grid steps, and the ledger.

A schedule X assigns each stage an integer height budget; the strict
schedule is X(t) = 48^t * (t-1)! (X(0) = 1), and scaled variants c^t * (t-1)!
exist to exercise the machinery at depth and document how much slack the
constant 48 carries.  The ledger re-certifies, in exponentiated integer
form, that every realized choice met its budget:

  * denominator of eps_n / n within exp(n X(n))        (condition 1)
  * every node height within exp(X(n))                 (condition 2)
  * every pinned value within exp(4 H(x)^2 X(H(x)^2))  (final bound)

The strict even step picks its node on the exact grid of denominator
M' = 2(m+1) 4^m 3^(13 m X(m)), an integer majorant of the analytic choice
threshold (base 3 > e only enlarges the grid, which strengthens every
inequality the ledger checks).  Grid exponents beyond the configured budget
refuse the step rather than approximate.  Scaled schedules keep the
bracket-refinement step: their grids would be unmaterializable within a few
stages, while the realized bracket heights pass the scaled ledger with room
to spare.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpq, mpz

from .avoid import AvoidFamily, default_family
from .basic import (ConstructionState, even_bisect_chooser, init_basic,
                    make_trace, run_steps, _shrink_until_node_free,
                    _neighbor_gap)
from .errors import ScheduleOverflow
from .poly import RootBracket
from .ratcore import (Rat, Verdict, bounded_rational_near, certify_h_le,
                      certify_h_le_lower_budget, height_H, rat_str)
from .trace import Trace

DEFAULT_EXPONENT_BUDGET = 1 << 30
ENV_BUDGET = "QBIJECT_EXPONENT_BUDGET"

# Largest t for which the final-bound budget 4t X(t) is materialized exactly;
# beyond it the structural lower bound 4t (X >= 1) certifies the pass side.
_EXACT_BUDGET_T = 100_000


def exponent_budget_default() -> int:
    value = os.environ.get(ENV_BUDGET)
    return int(value) if value else DEFAULT_EXPONENT_BUDGET


class HeightSchedule:
    """Stage height budgets X with their induced value bound B(t) = 4t X(t)."""

    def __init__(self, kind: str, c: int | None = None):
        if kind == "strict":
            base = 48
        elif kind == "scaled":
            if c is None or c < 2:
                raise ValueError("scaled schedules need an integer c >= 2")
            base = int(c)
        else:
            raise ValueError("kind must be 'strict' or 'scaled'")
        self.kind = kind
        self.base = mpz(base)
        self._X: list[mpz] = [mpz(1)]

    @classmethod
    def strict(cls) -> "HeightSchedule":
        return cls("strict")

    @classmethod
    def scaled(cls, c: int) -> "HeightSchedule":
        return cls("scaled", c)

    def X(self, n: int) -> mpz:
        """Exact budget base^n * (n-1)! for n >= 1; X(0) = 1."""
        if n < 0:
            raise ValueError("schedule index must be nonnegative")
        if n < len(self._X):
            return self._X[n]
        if n <= 4096:
            while len(self._X) <= n:
                t = len(self._X)
                self._X.append(self.base ** t * gmpy2.fac(t - 1))
            return self._X[n]
        return self.base ** n * gmpy2.fac(n - 1)

    def B(self, t) -> mpz:
        """Value-height budget 4t * X(t), t >= 1."""
        t = mpz(t)
        if t < 1:
            raise ValueError("t must be >= 1")
        return 4 * t * (self.base ** t * gmpy2.fac(int(t) - 1))

    def superadditive_upto(self, n_max: int) -> bool:
        """Check sum_{k<n} X(k) <= X(n) for all n <= n_max (never assumed)."""
        acc = mpz(0)
        for n in range(1, n_max + 1):
            acc += self.X(n - 1)
            if acc > self.X(n):
                return False
        return True

    def majorant_exponent(self, m: int) -> mpz:
        return 13 * m * self.X(m)

    def majorant(self, m: int, budget: int, step: int) -> mpz:
        """Integer grid size M' = 2(m+1) 4^m 3^(13 m X(m)); refused over budget."""
        exponent = self.majorant_exponent(m)
        if exponent > budget:
            raise ScheduleOverflow(int(exponent), budget, step)
        return 2 * (m + 1) * mpz(4) ** m * mpz(3) ** int(exponent)

    def descriptor(self) -> dict:
        return {"kind": self.kind, "c": int(self.base), "majorant_base": 3}

    @classmethod
    def from_descriptor(cls, data: dict) -> "HeightSchedule":
        if data["kind"] == "strict":
            return cls.strict()
        return cls.scaled(data["c"])


def make_grid_chooser(schedule: HeightSchedule, budget: int):
    """Even-step rule placing the node on the exact majorant grid.

    The preimage is bracketed to width < 1/(2M'), the side is chosen toward
    the midpoint of the surrounding node gap, and the grid point adjacent to
    the bracket is adopted; the correction size is then re-checked exactly.
    """

    def chooser(state: ConstructionState, rb: RootBracket, n: int, y_b,
                bound) -> tuple[Rat, Rat, dict]:
        m = n - 1
        grid = schedule.majorant(m, budget, n)
        sorted_nodes = sorted(state.nodes)
        _shrink_until_node_free(state, rb, sorted_nodes)
        aux = {
            "majorant_exponent": int(schedule.majorant_exponent(m)),
            "majorant_base": 3,
            "grid_digits": int(gmpy2.num_digits(grid, 10)),
        }
        if rb.exact is None:
            lo, hi = rb.bounds()
            a_t, a_t1 = _neighbor_gap(sorted_nodes, lo, hi)
            rb.refine_to(2 * grid + 1)
            lo, hi = rb.bounds()
        side = None
        if rb.exact is not None:
            z = rb.exact
            if z not in state.node_set:
                aux.update({"bracket": [rat_str(z), rat_str(z)], "side": "exact",
                            "halvings": rb.halvings})
                return z, mpq(0), aux
            raise AssertionError("exact preimage collided with a node")
        mid = (a_t + a_t1) / 2
        if lo >= mid:
            side = "below"
        elif hi <= mid:
            side = "above"
        else:
            f_mid = state.f.eval(mid)
            if f_mid == y_b:
                aux.update({"bracket": [rat_str(mid), rat_str(mid)],
                            "side": "exact", "halvings": rb.halvings})
                return mid, mpq(0), aux
            side = "below" if f_mid < y_b else "above"
        z = bounded_rational_near((lo, hi), grid, side)
        assert z not in state.node_set
        h = (y_b - state.f.eval(z)) / state.np.eval(z)
        assert abs(h) < bound
        aux.update({"bracket": [rat_str(lo), rat_str(hi)], "side": side,
                    "halvings": rb.halvings})
        return z, n * h, aux

    return chooser


def run_heights(depth: int, schedule: HeightSchedule,
                avoid: AvoidFamily | None = None,
                budget: int | None = None,
                ) -> tuple[ConstructionState, Trace, "HeightLedger"]:
    """Height-budgeted run (lexicographic on both sides) plus its ledger."""
    avoid = default_family() if avoid is None else avoid
    budget = exponent_budget_default() if budget is None else budget
    if not schedule.superadditive_upto(max(depth, 8)):
        raise ValueError("schedule is not superadditive up to the run depth")
    state = init_basic(avoid, None, mode="heights")
    even_rule = "grid" if schedule.kind == "strict" else "bisect"
    if even_rule == "grid":
        for m in range(3, depth, 2):  # refuse before any work is done
            exponent = schedule.majorant_exponent(m)
            if exponent > budget:
                raise ScheduleOverflow(int(exponent), budget, m + 1)
        state.even_chooser = make_grid_chooser(schedule, budget)
    else:
        state.even_chooser = even_bisect_chooser
    run_steps(state, depth)
    config = {
        "mode": "heights",
        "depth": depth,
        "x_enum": "lex",
        "y_enum": "lex",
        "even_rule": even_rule,
        "schedule": schedule.descriptor(),
        "exponent_budget": int(budget),
        "avoid": avoid.to_json(),
    }
    trace = make_trace(state, config)
    ledger = check_height_ledger(trace, schedule)
    return state, trace, ledger


# ---------------------------------------------------------------------------
# Ledger
# ---------------------------------------------------------------------------

@dataclass
class LedgerEntry:
    check: str
    location: str
    verdict: Verdict
    note: str = ""

    def to_json(self) -> dict:
        return {"check": self.check, "location": self.location,
                "verdict": self.verdict.value, "note": self.note}


@dataclass
class HeightLedger:
    entries: list[LedgerEntry] = field(default_factory=list)

    @property
    def all_pass(self) -> bool:
        return all(e.verdict is Verdict.PASS for e in self.entries)

    def failures(self) -> list[LedgerEntry]:
        return [e for e in self.entries if e.verdict is not Verdict.PASS]

    def counts(self) -> dict:
        out = {"pass": 0, "fail": 0, "marginal": 0}
        for e in self.entries:
            out[e.verdict.value] += 1
        return out

    def to_json(self) -> dict:
        return {"counts": self.counts(),
                "entries": [e.to_json() for e in self.entries]}


def _digits(x) -> int:
    return int(gmpy2.num_digits(mpz(x), 10))


def check_height_ledger(trace: Trace, schedule: HeightSchedule) -> HeightLedger:
    """Re-certify every height budget of a run, entry by entry.

    Failures and marginal verdicts are data, not exceptions: the ledger is
    how a run documents exactly which realized quantities met which budgets.
    """
    nodes = trace.nodes_in_order()
    eps = trace.eps_sequence()
    values = [mpq(0), mpq(1)] + [rec.value for rec in trace.steps]
    depth = len(eps)
    entries: list[LedgerEntry] = []

    for n in range(1, depth + 1):
        budget_n = n * schedule.X(n)
        entries.append(LedgerEntry(
            "cond1-eps-denominator", f"stage {n}",
            certify_h_le(eps[n - 1] / n, budget_n),
            f"D(eps_{n}/{n}) has {_digits(height_H(eps[n - 1] / n))} digits",
        ))
        worst = max(nodes[:n + 1], key=height_H)
        entries.append(LedgerEntry(
            "cond2-node-heights", f"stage {n}",
            certify_h_le(worst, schedule.X(n)),
            f"max H among nodes 0..{n} has {_digits(height_H(worst))} digits",
        ))
        if n >= 3:
            ok = abs(eps[n - 1]) <= mpq(1, mpz(4) ** (n - 1))
            entries.append(LedgerEntry(
                "eps-size", f"stage {n}",
                Verdict.PASS if ok else Verdict.FAIL,
                "|eps| <= 4^(1-n)" if ok else "|eps| exceeds 4^(1-n)",
            ))

    acc = mpz(0)
    super_ok = True
    for n in range(1, depth + 1):
        acc += schedule.X(n - 1)
        if acc > schedule.X(n):
            super_ok = False
            break
    entries.append(LedgerEntry(
        "schedule-superadditive", f"stages 1..{depth}",
        Verdict.PASS if super_ok else Verdict.FAIL,
    ))

    for k in range(2, len(nodes)):
        node, value = nodes[k], values[k]
        H = height_H(node)
        # ordinal bound: the adoption stage never exceeds H^2
        if H.bit_length() > 40 or k <= H * H:
            ordinal = Verdict.PASS
        else:
            ordinal = Verdict.FAIL
        entries.append(LedgerEntry("node-ordinal", f"node {k}", ordinal,
                                   f"k={k} vs H^2 of a {_digits(H)}-digit H"))
        # stage chain bound: D(f_k(node)) within H^k * exp(3k X(k))
        Dv = height_H(value)
        chain_budget = 3 * k * schedule.X(k)
        allowed_bits = k * max(int(H.bit_length()) - 1, 0) \
            + int((144 * chain_budget) // 100)
        if int((Dv - 1).bit_length()) <= allowed_bits:
            chain = Verdict.PASS
        else:
            chain = certify_h_le(mpq(Dv, 1), chain_budget)  # drop the H^k slack
        entries.append(LedgerEntry("value-chain-bound", f"node {k}", chain,
                                   f"D(value) has {_digits(Dv)} digits"))
        # final bound: D(f(x)) within exp(B(H(x)^2))
        if H.bit_length() <= 20 and H * H <= _EXACT_BUDGET_T:
            verdict = certify_h_le(mpq(Dv, 1), schedule.B(H * H))
            note = f"exact budget B({H}^2)"
        else:
            verdict = certify_h_le_lower_budget(mpq(Dv, 1), 4 * H * H)
            note = "budget certified via the structural lower bound 4t <= B(t)"
        entries.append(LedgerEntry("value-final-bound", f"node {k}", verdict,
                                   note))

    return HeightLedger(entries)
