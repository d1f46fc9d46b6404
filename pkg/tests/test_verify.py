import dataclasses

import pytest
from gmpy2 import mpq, mpz

from qbiject.avoid import default_family
from qbiject.basic import run_basic
from qbiject.errors import ParseError, PoleInUnit, ReplayDivergence
from qbiject.ratcore import height_H, lex_enumerate
from qbiject.trace import Trace
from qbiject.verify import (asymptotic_suite, lft_bijection_check,
                            verify_trace)

from oracle import brute_basic_replay


def test_verify_basic_trace_passes(basic21):
    _, trace = basic21.result
    report = verify_trace(trace)
    assert report.all_pass, report.summary()
    checks = {e.check for e in report.entries}
    assert {"replay", "eps-discipline", "correction-vanishing",
            "prefix-stability", "monotone-analytic", "endpoints",
            "avoidance-witnesses", "coverage-prefix"} <= checks


def test_verify_heights_trace_passes(heights_scaled25):
    _, trace, _ = heights_scaled25.result
    report = verify_trace(trace)
    assert report.all_pass, report.summary()
    assert any(e.check.startswith("ledger:") for e in report.entries)


def test_verify_pila_trace_passes(pila3):
    _, trace = pila3.result
    report = verify_trace(trace)
    assert report.all_pass, report.summary()


def test_tampered_eps_diverges(basic21):
    _, trace = basic21.result
    tampered = Trace.from_json(trace.to_json())
    old = tampered.steps[5]
    tampered.steps[5] = dataclasses.replace(
        old, eps=old.eps + mpq(1, mpz(10) ** 100))
    with pytest.raises(ReplayDivergence) as exc:
        verify_trace(tampered)
    assert exc.value.step == 5


def test_tampered_value_fails_without_replay(basic21):
    _, trace = basic21.result
    tampered = Trace.from_json(trace.to_json())
    old = tampered.steps[4]
    tampered.steps[4] = dataclasses.replace(
        old, value=old.value + mpq(1, mpz(10) ** 60))
    report = verify_trace(tampered, replay=False)
    assert not report.all_pass


def test_unknown_mode_rejected(basic21):
    _, trace = basic21.result
    broken = Trace.from_json(trace.to_json())
    broken.mode = "mystery"
    with pytest.raises(ParseError):
        verify_trace(broken)


def test_report_serializes(basic21):
    _, trace = basic21.result
    report = verify_trace(trace, replay=False)
    js = report.to_json()
    assert js["all_pass"] is True
    assert js["counts"]["fail"] == 0
    assert "PASS" in report.summary()


# -- degree-one baselines -----------------------------------------------------

def test_lft_bijection_checks():
    assert lft_bijection_check(0, "first", 50)
    assert lft_bijection_check(mpq(1, 2), "first", 50)
    assert lft_bijection_check(mpq(-2), "second", 30)
    with pytest.raises(PoleInUnit):
        lft_bijection_check(2, "first", 10)


# -- enumeration asymptotics ----------------------------------------------------

def test_asymptotic_suite_small():
    result = asymptotic_suite(10 ** 4)
    assert result["index_growth_pass"]
    assert result["asymptotic_pass"]
    assert result["H_at_n_max"] == height_H(lex_enumerate(10 ** 4))


def test_asymptotic_suite_rejects_tiny():
    with pytest.raises(ValueError):
        asymptotic_suite(5)


# -- independent full replay -------------------------------------------------------

@pytest.mark.parametrize("depth", [3, 4, 5, 6, 7])
def test_bruteforce_oracle_agrees(depth):
    from fractions import Fraction
    state, _ = run_basic(depth)
    params = [Fraction(0), Fraction(-1), Fraction(-2)]  # first default members
    nodes, values, eps = brute_basic_replay(depth, params)
    assert len(nodes) == len(state.nodes)
    for ours, theirs in zip(state.nodes, nodes):
        assert ours.numerator == theirs.numerator
        assert ours.denominator == theirs.denominator
    for ours, theirs in zip(state.values, values):
        assert ours.numerator == theirs.numerator
        assert ours.denominator == theirs.denominator
    for ours, theirs in zip(state.eps, eps):
        assert mpq(ours) == mpq(theirs)
