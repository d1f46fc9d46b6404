import pytest
from gmpy2 import mpq, mpz

import gmpy2
from qbiject.basic import init_basic, run_steps, step_odd
from qbiject.errors import ScheduleOverflow
from qbiject.heights import (HeightSchedule, check_height_ledger,
                             make_grid_chooser, run_heights)
from qbiject.ratcore import Verdict, certify_h_le, height_H
from qbiject.trace import Trace


def test_schedule_values_strict():
    sch = HeightSchedule.strict()
    assert [int(sch.X(i)) for i in range(4)] == [1, 48, 2304, 221184]
    assert int(sch.B(1)) == 192
    assert int(sch.B(4)) == 509607936
    for t in range(1, 21):
        assert sch.B(t) == 4 * t * sch.X(t)


def test_schedule_values_scaled():
    sch = HeightSchedule.scaled(2)
    assert [int(sch.X(i)) for i in range(5)] == [1, 2, 4, 16, 96]
    assert sch.superadditive_upto(60)


def test_schedule_rejects_tiny_base():
    with pytest.raises(ValueError):
        HeightSchedule.scaled(1)


def test_majorant_exponents():
    strict = HeightSchedule.strict()
    assert int(strict.majorant_exponent(3)) == 8626176
    scaled = HeightSchedule.scaled(2)
    assert int(scaled.majorant_exponent(3)) == 624
    grid = scaled.majorant(3, 1 << 30, step=4)
    assert grid == 8 * 64 * mpz(3) ** 624


def test_majorant_budget_refusal():
    strict = HeightSchedule.strict()
    with pytest.raises(ScheduleOverflow):
        strict.majorant(5, 1 << 30, step=6)   # 13*5*X(5) ~ 4e11


def test_strict_depth7_refused():
    with pytest.raises(ScheduleOverflow):
        run_heights(7, HeightSchedule.strict())


def test_first_odd_step_budget_arithmetic():
    # menu denominator at the first odd stage: (m+2) 4^m = 64
    state = init_basic(mode="heights")
    step_odd(state)
    rec = state.records[-1]
    assert rec.eps.denominator == 64
    assert height_H(rec.node) == 3               # H(x_3) = 3 <= m+1 = 3
    # denominator of eps_3/3 is 192 and certifies against 3 X(3)
    assert (rec.eps / 3).denominator == 192
    strict = HeightSchedule.strict()
    assert certify_h_le(rec.eps / 3, 3 * strict.X(3)) is Verdict.PASS


def test_grid_chooser_with_scaled_schedule():
    # exercises the grid step cheaply: scaled majorant at m=3 is ~990 bits
    sch = HeightSchedule.scaled(2)
    state = init_basic(mode="heights")
    state.even_chooser = make_grid_chooser(sch, 1 << 30)
    run_steps(state, 4)
    rec = state.records[-1]
    assert rec.kind == "even"
    assert rec.aux["majorant_exponent"] == 624
    grid = 8 * 64 * mpz(3) ** 624
    assert height_H(rec.node) <= grid
    assert state.f.eval(rec.node) == rec.value
    assert abs(rec.eps) < mpq(1, 64)


def test_scaled_run_ledger_passes(heights_scaled25):
    state, trace, ledger = heights_scaled25.result
    assert ledger.all_pass
    assert trace.depth() == 25
    counts = ledger.counts()
    assert counts["fail"] == 0 and counts["marginal"] == 0
    assert counts["pass"] == len(ledger.entries)


def test_ledger_catches_tampered_eps(heights_scaled25):
    import dataclasses
    _, trace, _ = heights_scaled25.result
    tampered = Trace.from_json(trace.to_json())
    big = mpz(2) ** 1_000_000
    tampered.steps[1] = dataclasses.replace(tampered.steps[1], eps=mpq(1, big))
    ledger = check_height_ledger(tampered, HeightSchedule.scaled(2))
    bad = [e for e in ledger.entries
           if e.check == "cond1-eps-denominator" and e.verdict is Verdict.FAIL]
    assert bad, "tampered denominator must fail condition 1"


def test_ledger_entry_structure(heights_scaled25):
    _, _, ledger = heights_scaled25.result
    checks = {e.check for e in ledger.entries}
    assert {"cond1-eps-denominator", "cond2-node-heights", "eps-size",
            "schedule-superadditive", "node-ordinal", "value-chain-bound",
            "value-final-bound"} <= checks
    js = ledger.to_json()
    assert js["counts"]["pass"] == len(js["entries"])


def test_heights_trace_declares_mode(heights_scaled25):
    _, trace, _ = heights_scaled25.result
    assert trace.mode == "heights"
    assert trace.config["schedule"] == {"kind": "scaled", "c": 2,
                                        "majorant_base": 3}
    assert trace.config["even_rule"] == "bisect"


def test_scaled_ledger_passes_at_tier_one(heights_scaled25):
    # the budget conditions hold already with the coarse 1.44 constant
    from qbiject.ratcore import passes_tier1
    _, trace, _ = heights_scaled25.result
    sch = HeightSchedule.scaled(2)
    eps = trace.eps_sequence()
    nodes = trace.nodes_in_order()
    for n in range(1, len(eps) + 1):
        assert passes_tier1(eps[n - 1] / n, n * sch.X(n))
        for k in range(n + 1):
            assert passes_tier1(nodes[k], sch.X(n))


def test_half_point_final_budget_is_trivial():
    # pinned pair (1/2 -> 1/2): denominator 2 against the budget B(4)
    strict = HeightSchedule.strict()
    assert int(strict.B(4)) == 509607936
    assert certify_h_le(mpq(1, 2), strict.B(4)) is Verdict.PASS
