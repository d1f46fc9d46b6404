"""Alternating back-and-forth construction of a rational-preserving map.

The state carries a strictly increasing polynomial stage f_m that already
pins finitely many exact (node -> value) pairs.  Odd steps adopt the least
unconsidered enumeration point and give it a fresh rational value chosen
from a discrete perturbation menu; even steps adopt the least untaken target
value and place a new node at an exactly-bracketed preimage.  Every later
stage vanishes on all existing nodes, so pinned pairs are final.

All choices are deterministic, recorded step by step, and re-checkable in
exact arithmetic; there is no randomness anywhere.
"""

from __future__ import annotations

import bisect
from typing import Callable

from gmpy2 import mpq, mpz

from .avoid import AvoidFamily, default_family
from .errors import AvoidanceExhausted, BadEnumeration, HeightTooLarge
from .poly import Poly, RootBracket, node_product
from .ratcore import (Rat, lex_enumerate, lex_index, rat_str)
from .trace import StepRecord, Trace

# Analytic lower bound for the stage derivative implied by the menu bounds:
# 1 - sum_{k>=3} 4^(1-k) = 11/12, asserted against the coarser 2/3 gate.
DERIV_FLOOR = mpq(2, 3)


def _safe_lex_index(q) -> int | None:
    try:
        return lex_index(q)
    except HeightTooLarge:
        return None


class ConstructionState:
    """Mutable state of one run; snapshots are taken as immutable records."""

    def __init__(self, avoid: AvoidFamily, y_enum: Callable[[int], Rat],
                 mode: str = "basic"):
        self.mode = mode
        self.avoid = avoid
        self.y_enum = y_enum
        self.nodes: list[Rat] = []
        self.values: list[Rat] = []
        self.node_set: set = set()
        self.value_set: set = set()
        self.eps: list[Rat] = []          # eps[k-1] = eps_k
        self.f = Poly.identity()
        self.np = Poly.constant(1)        # product of (x - node) over all nodes
        self.sum_eps_abs = mpq(0)         # sum over k >= 3 of |eps_k|
        self.m = 0
        self.y_cursor = 0
        self.records: list[StepRecord] = []
        self.seed_repair: dict | None = None
        self.even_chooser = even_bisect_chooser

    # -- bookkeeping -----------------------------------------------------------

    def _adopt(self, node: Rat, value: Rat) -> None:
        self.nodes.append(node)
        self.values.append(value)
        self.node_set.add(node)
        self.value_set.add(value)
        self.np = self.np.mul_linear(node)

    def _advance(self, n: int, node: Rat, value: Rat, eps_n: Rat) -> None:
        if eps_n != 0:
            self.f = self.f + (eps_n / n) * self.np
        self._adopt(node, value)
        self.eps.append(eps_n)
        if n >= 3:
            self.sum_eps_abs += abs(eps_n)
        self.m = n
        assert self.f.eval(node) == value
        assert self.f.coeff(0) == 0 and self.f.eval(1) == 1

    def deriv_lower_bound(self) -> Rat:
        """Exact lower bound for f' on [0,1] from the per-stage menu bounds."""
        return 1 - self.sum_eps_abs

    def least_unused_x_index(self) -> int:
        a = 0
        while lex_enumerate(a) in self.node_set:
            a += 1
        return a

    def least_unassigned_y_index(self) -> int:
        b = self.y_cursor
        while self.y_enum(b) in self.value_set:
            b += 1
        return b

    def f_exact_at(self, q) -> Rat | None:
        """Pinned exact value at q, or None when q is still undetermined."""
        q = mpq(q)
        if q in self.node_set:
            return self.values[self.nodes.index(q)]
        return None


def init_basic(avoid: AvoidFamily | None = None,
               y_enum: Callable[[int], Rat] | None = None,
               mode: str = "basic") -> ConstructionState:
    """Seed the recursion: f_2 = x with 0, 1 fixed and the first target repaired.

    The repair runs a degenerate even step at m+1 = 2: the least untaken
    target y_2 is its own preimage under the identity, pinning (y_2 -> y_2)
    with a zero correction, which makes the stage-3 node product well defined.
    """
    avoid = default_family() if avoid is None else avoid
    y_enum = lex_enumerate if y_enum is None else y_enum
    if lex_enumerate(0) != 0 or lex_enumerate(1) != 1:
        raise BadEnumeration("x-enumeration must start 0, 1")
    if y_enum(0) != 0 or y_enum(1) != 1:
        raise BadEnumeration("y-enumeration must start 0, 1")
    y2 = mpq(y_enum(2))
    if not 0 < y2 < 1:
        raise BadEnumeration(f"y_2 must be a fresh rational in (0,1), got {y2}")
    state = ConstructionState(avoid, y_enum, mode)
    state._adopt(mpq(0), mpq(0))
    state._adopt(mpq(1), mpq(1))
    state.eps = [mpq(1), mpq(0)]      # eps_1 = 1, eps_2 = 0
    j2 = _safe_lex_index(y2)
    state._adopt(y2, y2)
    state.m = 2
    state.y_cursor = 3
    state.seed_repair = {"j2": j2, "y2": rat_str(y2)}
    state.records.append(StepRecord(
        m=2, kind="seed", j=j2, node=y2, eps=mpq(0), value=y2,
        aux={"b": 2},
    ))
    return state


def step_odd(state: ConstructionState) -> ConstructionState:
    """Adopt the least unconsidered point; choose its value from the s-menu.

    The new value z = f_m(x_a) + (s / ((m+2) 4^m)) / (m+1) * prod(x_a - node)
    takes the least s in 0..m+2 that avoids the already-assigned values and
    the current avoid-family value at x_a; m+3 candidates against at most
    m+2 exclusions, so a choice always exists.
    """
    n = state.m + 1
    if n < 3 or n % 2 == 0:
        raise ValueError(f"odd step expects odd stage >= 3, got {n}")
    a = state.least_unused_x_index()
    x_a = lex_enumerate(a)
    f_at = state.f.eval(x_a)
    prod = state.np.eval(x_a)
    t = (n - 3) // 2
    g = state.avoid.get(t)
    g_val = g.eval(x_a) if g is not None else None
    menu_den = (n + 1) * mpz(4) ** (n - 1)
    chosen = None
    for s in range(n + 2):
        eps_n = mpq(s, menu_den)
        z = f_at + eps_n / n * prod
        if z in state.value_set or (g_val is not None and z == g_val):
            continue
        chosen = (s, eps_n, z)
        break
    if chosen is None:
        raise AvoidanceExhausted(f"menu exhausted at stage {n}")  # unreachable
    s, eps_n, z = chosen
    assert 0 < z < 1
    assert abs(eps_n) <= mpq(1, mpz(4) ** (n - 1))
    witness = None
    if g is not None:
        witness = {
            "g_index": t,
            "point": rat_str(x_a),
            "f_value": rat_str(z),
            "g_value": rat_str(g_val),
        }
    state._advance(n, x_a, z, eps_n)
    state.records.append(StepRecord(
        m=n, kind="odd", j=a, node=x_a, eps=eps_n, value=z,
        aux={"a": a, "s": s}, avoid_witness=witness,
    ))
    return state


def _shrink_until_node_free(state: ConstructionState, rb: RootBracket,
                            sorted_nodes: list) -> None:
    while rb.exact is None:
        lo, hi = rb.bounds()
        i = bisect.bisect_left(sorted_nodes, lo)
        if i < len(sorted_nodes) and sorted_nodes[i] <= hi:
            rb.halve()
        else:
            return


def _neighbor_gap(sorted_nodes: list, lo, hi) -> tuple[Rat, Rat]:
    i = bisect.bisect_left(sorted_nodes, lo)
    return sorted_nodes[i - 1], sorted_nodes[i]


def even_bisect_chooser(state: ConstructionState, rb: RootBracket, n: int,
                        y_b, bound) -> tuple[Rat, Rat, dict]:
    """Bracket the preimage and take the endpoint with more room to the nodes.

    The initial bracket width 1 / (4^m (m+1) C) uses the exact reciprocal
    product bound C over the node-free bracket, which already forces the
    correction within a factor 2 of the target; the exact check then halves
    until it passes.  An exact midpoint hit short-circuits with a zero
    correction.
    """
    sorted_nodes = sorted(state.nodes)
    _shrink_until_node_free(state, rb, sorted_nodes)
    if rb.exact is None:
        lo, hi = rb.bounds()
        a_t, a_t1 = _neighbor_gap(sorted_nodes, lo, hi)
        recip = mpq(1)
        for node in sorted_nodes:
            recip /= (lo - node) if node < lo else (node - hi)
        c_int = -((-abs(recip).numerator) // abs(recip).denominator)
        rb.refine_to(mpz(4) ** (n - 1) * n * c_int)
    while True:
        lo, hi = rb.bounds()
        if lo == hi:
            z = lo
            assert z not in state.node_set
            eps_n = mpq(0)
            aux = {"bracket": [rat_str(z), rat_str(z)], "side": "exact",
                   "halvings": rb.halvings}
            return z, eps_n, aux
        if (lo - a_t) >= (a_t1 - hi):
            side, z = "below", lo
        else:
            side, z = "above", hi
        if z in state.node_set:
            rb.halve()
            continue
        h = (y_b - state.f.eval(z)) / state.np.eval(z)
        if abs(h) < bound:
            aux = {"bracket": [rat_str(lo), rat_str(hi)], "side": side,
                   "halvings": rb.halvings}
            return z, n * h, aux
        rb.halve()


def step_even(state: ConstructionState) -> ConstructionState:
    """Adopt the least untaken target value y_b at an exactly located preimage.

    The step's correction eps/(m+1) = h_m(z) with
    h_m(x) = (y_b - f_m(x)) / prod(x - node) keeps |eps| < 4^-m by the
    bracket refinement, and makes f_{m+1}(z) = y_b an exact identity.
    """
    n = state.m + 1
    if n < 4 or n % 2 == 1:
        raise ValueError(f"even step expects even stage >= 4, got {n}")
    b = state.least_unassigned_y_index()
    y_b = state.y_enum(b)
    cert = state.deriv_lower_bound()
    assert cert >= DERIV_FLOOR
    bound = mpq(1, n * mpz(4) ** (n - 1))
    rb = RootBracket(state.f, y_b, deriv_lower=cert)
    z, eps_n, aux = state.even_chooser(state, rb, n, y_b, bound)
    aux["b"] = b
    assert abs(eps_n) < mpq(1, mpz(4) ** (n - 1))
    state._advance(n, z, y_b, eps_n)
    state.y_cursor = b + 1
    state.records.append(StepRecord(
        m=n, kind="even", j=_safe_lex_index(z), node=z, eps=eps_n, value=y_b,
        aux=aux,
    ))
    return state


def run_steps(state: ConstructionState, depth: int) -> ConstructionState:
    if depth < 3:
        raise ValueError("depth must be >= 3")
    while state.m < depth:
        if (state.m + 1) % 2 == 1:
            step_odd(state)
        else:
            step_even(state)
    return state


def make_trace(state: ConstructionState, config: dict) -> Trace:
    return Trace(mode=state.mode, config=config, steps=list(state.records),
                 seed_repair=dict(state.seed_repair or {}))


def run_basic(depth: int, avoid: AvoidFamily | None = None,
              y_enum: Callable[[int], Rat] | None = None
              ) -> tuple[ConstructionState, Trace]:
    """Run the alternating construction to the given stage; emit its trace."""
    avoid = default_family() if avoid is None else avoid
    state = init_basic(avoid, y_enum, mode="basic")
    run_steps(state, depth)
    config = {
        "mode": "basic",
        "depth": depth,
        "x_enum": "lex",
        "y_enum": "lex" if state.y_enum is lex_enumerate else "custom",
        "even_rule": "bisect",
        "avoid": avoid.to_json(),
    }
    return state, make_trace(state, config)


def f_exact_at(trace: Trace, q) -> Rat | None:
    """Exact pinned value of the limit map at q, or None if undetermined."""
    return trace.assigned_value(q)
