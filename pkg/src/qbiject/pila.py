"""Stages that freeze the map on all rationals of bounded height at once.

Each stage n computes an exact height-growth certificate (b, d) for the
current polynomial, picks the least threshold T_n whose certified point
count beats a slowly increasing demand s(T_n), and freezes the map on every
rational of height <= T_n plus the preimage witnesses accumulated so far.
Corrections vanish on the whole frozen set, so the count

    #{x : H(x) <= T_n, H(f(x)) <= T_n}  >=  ceil(s_upper(T_n))

holds for the limit map exactly as it does for the stage polynomial.

Nonzero corrections multiply a node product over the entire frozen set, so
they are only materializable while that set is small; every deterministic
choice below prefers the zero correction and the construction refuses
loudly (StageInfeasible) if a stage genuinely needs an unmaterializable
update.
"""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
from gmpy2 import mpq, mpz

from .avoid import AvoidFamily, default_family
from .enclosure import ln_enclosure
from .errors import EmptyTildeQ, StageInfeasible, StageTooShallow
from .poly import Poly, RootBracket, node_product
from .ratcore import (Rat, farey_count, height_H, iter_unit_rationals,
                      lex_enumerate, rat_str, simplest_in_interval)
from .trace import Trace

DERIV_FLOOR = mpq(2, 3)

# Degree cap for materialized node-product corrections.
MAX_PRODUCT_DEGREE = 4096

# Exact full counts are only attempted up to this threshold.
CF_EXACT_CAP = 512


@dataclass(frozen=True)
class SlowFunction:
    """Demand curve s(T) = c * (ln T)^k, evaluated as a certified upper bound.

    Only inequalities of the form count >= s(T) are ever needed, so an
    outward-rounded rational upper bound is the honest evaluation.
    """

    c: Rat
    k: int

    def __post_init__(self):
        if mpq(self.c) < 0:
            raise ValueError("coefficient must be nonnegative")
        if self.k < 1:
            raise ValueError("exponent must be a positive integer")

    def upper(self, T) -> Rat:
        c = mpq(self.c)
        if c == 0:
            return mpq(0)
        _, hi = ln_enclosure(mpq(T))
        return c * hi ** self.k

    def ceil_upper(self, T) -> int:
        u = self.upper(T)
        return int(-((-u.numerator) // u.denominator))

    def descriptor(self) -> dict:
        return {"c": rat_str(self.c), "k": self.k}


def poly_height_coeff(f: Poly) -> tuple[mpz, int]:
    """Certificate (b, d) with H(f(q)) <= b * H(q)^d for all q in Q∩[0,1].

    Writing f = (sum a_i x^i) / L in shared-denominator form, a point p/q in
    lowest terms gives |numerator| <= sum|a_i| * q^d and denominator
    L * q^d, so b = max(sum|a_i|, L) works and is exactly computable.
    """
    if f.degree < 1:
        raise ValueError("height certificate needs a nonconstant polynomial")
    coeffs = f.coeffs
    den = gmpy2.lcm(*[c.denominator for c in coeffs]) if coeffs else mpz(1)
    total = sum(abs(c.numerator) * (den // c.denominator) for c in coeffs)
    return max(total, den), f.degree


def choose_T(b, d: int, lower, slow: SlowFunction) -> int:
    """Least T >= max(lower, b+1) with farey_count(floor((T/b)^(1/d))) >= ceil s(T).

    Within one grid interval [b K^d, b (K+1)^d) the certified count is
    constant while the demand is nondecreasing, so only interval starts need
    to be probed.
    """
    b = mpz(b)
    T = max(int(lower), int(b) + 1)
    while True:
        K, _ = gmpy2.iroot(mpz(T) // b, d)
        if farey_count(K) >= slow.ceil_upper(T):
            return T
        T = int(b * (K + 1) ** d)


class PilaState:
    """State across stages: current polynomial, thresholds, witnesses."""

    def __init__(self, avoid: AvoidFamily, y_enum=None):
        self.avoid = avoid.increasing_subfamily()
        self.y_enum = lex_enumerate if y_enum is None else y_enum
        self.f = Poly.identity()
        self.f_history: list[Poly] = [self.f]   # f_history[n] = stage-n poly
        self.T_list: list[int] = []
        self.z_list: list[Rat] = []
        self.eps_list: list[Rat] = []
        self.r_list: list[Rat | None] = []
        self.q_sizes: list[int] = []
        self.records: list[dict] = []
        self.cert_slack = mpq(0)   # sum over stages of |eps| * |Q|

    @property
    def stage(self) -> int:
        return len(self.T_list)

    def deriv_lower_bound(self) -> Rat:
        return 1 - self.cert_slack

    def in_frozen_set(self, q, T: int) -> bool:
        return height_H(q) <= T or mpq(q) in set(self.z_list)


def _rational_preimage(state: PilaState, y, T: int):
    """Exact rational preimage of y under state.f, if one is detectable.

    A bracket of width < 1/(4 T^2) holds at most one rational of height <= T,
    so checking the minimal-denominator element decides membership in the
    frozen set soundly.  Two extra deep probes catch exact rational preimages
    of moderately larger height (useful only for the zero-correction path).
    Returns (preimage | None, bracket).
    """
    y = mpq(y)
    if y == 0:
        return mpq(0), (mpq(0), mpq(0))
    if y == 1:
        return mpq(1), (mpq(1), mpq(1))
    rb = RootBracket(state.f, y, deriv_lower=state.deriv_lower_bound())
    width_den = 4 * mpz(T) ** 2
    for _probe in range(3):
        lo, hi = rb.refine_to(width_den)
        if lo == hi:
            return lo, (lo, hi)
        cand = simplest_in_interval(lo, hi)
        if state.f.eval(cand) == y:
            return cand, (lo, hi)
        width_den <<= 64
    return None, rb.bounds()


def _materialized_product(state: PilaState, T: int, q_size: int) -> Poly:
    if q_size > MAX_PRODUCT_DEGREE:
        raise StageInfeasible(
            f"stage needs a degree-{q_size} correction; nothing of height "
            f"<= {T} admits a materializable update"
        )
    members = list(iter_unit_rationals(T))
    members.extend(z for z in state.z_list if height_H(z) > T)
    return node_product(members)


def _frozen_members(state: PilaState, T: int):
    for q in iter_unit_rationals(T):
        yield q
    for z in state.z_list:
        if height_H(z) > T:
            yield z


def pila_step(state: PilaState, slow: SlowFunction) -> PilaState:
    """One stage: pick T_n, freeze the height-<=T_n set, thread surjectivity.

    Case "image": the target y_n is already attained on the frozen set; the
    avoidance constraint is discharged at a fresh witness r of height T_n+1,
    preferring the zero correction (a nonzero one needs the full node
    product).  Case "preimage": a new node takes the value y_n exactly; with
    a rational preimage this costs nothing, otherwise it needs a
    materializable correction.
    """
    n = state.stage
    f = state.f
    b, d = poly_height_coeff(f)
    lower = int(b) + 1 if n == 0 else max(int(b) + 1, state.T_list[-1] + n)
    T_n = choose_T(b, d, lower, slow)
    if state.r_list and state.r_list[-1] is not None:
        if height_H(state.r_list[-1]) > T_n:
            raise EmptyTildeQ("previous witness not frozen by the next stage")
    q_size = farey_count(T_n) + sum(
        1 for z in state.z_list if height_H(z) > T_n)
    y_n = state.y_enum(n)
    g_n = state.avoid.get(n)

    preimage, bracket = _rational_preimage(state, y_n, T_n)
    eps_bound = None
    if q_size <= MAX_PRODUCT_DEGREE:
        eps_bound = mpq(1, q_size * mpz(4) ** (q_size + 1))

    witness = None
    r = None
    eps = mpq(0)
    correction: Poly | None = None

    if preimage is not None and state.in_frozen_set(preimage, T_n):
        case = "image"
        z_n = preimage
        r = _fresh_witness(state, T_n)
        f_r = f.eval(r)
        g_r = g_n.eval(r) if g_n is not None else None
        if g_n is None or f_r != g_r:
            eps = mpq(0)
            value_at_r = f_r
        else:
            if eps_bound is None:
                raise StageInfeasible(
                    f"avoidance at stage {n} needs a degree-{q_size} correction")
            correction = _materialized_product(state, T_n, q_size)
            prod_r = correction.eval(r)
            eps = eps_bound
            value_at_r = f_r + eps * prod_r
            if value_at_r == g_r:  # impossible: both rungs bad forces prod_r = 0
                raise AssertionError("distinct corrections cannot both collide")
        if g_n is not None:
            witness = {"g_index": n, "point": rat_str(r),
                       "f_value": rat_str(value_at_r), "g_value": rat_str(g_r)}
    else:
        case = "preimage"
        if preimage is not None:
            z_n = preimage
            g_z = g_n.eval(z_n) if g_n is not None else None
            if g_n is not None and g_z == y_n:
                z_n = None  # collides with the avoided map; need a perturbed node
        else:
            z_n = None
        if z_n is not None:
            eps = mpq(0)
            if g_n is not None:
                witness = {"g_index": n, "point": rat_str(z_n),
                           "f_value": rat_str(y_n),
                           "g_value": rat_str(g_n.eval(z_n))}
        else:
            if eps_bound is None:
                raise StageInfeasible(
                    f"stage {n} needs a degree-{q_size} correction for a new node")
            correction = _materialized_product(state, T_n, q_size)
            z_n, eps, witness = _perturbed_node(state, y_n, T_n, correction,
                                                eps_bound, g_n, n)

    f_next = f if eps == 0 else f + eps * correction
    assert f_next.eval(z_n) == y_n
    assert f_next.coeff(0) == 0 and f_next.eval(1) == 1
    state.cert_slack += abs(eps) * q_size
    assert state.deriv_lower_bound() >= DERIV_FLOOR

    state.T_list.append(int(T_n))
    state.z_list.append(z_n)
    state.eps_list.append(eps)
    state.r_list.append(r)
    state.q_sizes.append(int(q_size))
    state.f = f_next
    state.f_history.append(f_next)

    threshold = slow.ceil_upper(T_n)
    reached = count_at_least(f_next, T_n, threshold)
    if reached < threshold:
        raise AssertionError("certified count fell short of the demand")
    cf_exact = None
    if T_n <= CF_EXACT_CAP:
        cf_exact = count_points(f_next, T_n)

    state.records.append({
        "n": n,
        "T": int(T_n),
        "q_size": int(q_size),
        "b": str(b),
        "d": int(d),
        "case": case,
        "z": rat_str(z_n),
        "eps": rat_str(eps),
        "r": None if r is None else rat_str(r),
        "bracket": [rat_str(bracket[0]), rat_str(bracket[1])],
        "avoid_witness": witness,
        "cf_threshold": int(threshold),
        "cf_verified_at_least": int(reached),
        "cf_exact": cf_exact,
        "s_upper": rat_str(slow.upper(T_n)),
    })
    return state


def _fresh_witness(state: PilaState, T_n: int) -> Rat:
    """Least fresh rational above the threshold, in enumeration order."""
    taken = set(state.z_list)
    k = T_n + 1
    while True:
        for a in range(1, k):
            if gmpy2.gcd(a, k) == 1:
                cand = mpq(a, k)
                if cand not in taken:
                    return cand
        k += 1
        if k > T_n + 1 + len(taken) + 2:
            raise EmptyTildeQ("no fresh witness found")  # unreachable


def _perturbed_node(state: PilaState, y_n, T_n: int, correction: Poly,
                    eps_bound, g_n, n: int):
    """Bracket-halving node choice for a genuinely new preimage."""
    rb = RootBracket(state.f, y_n, deriv_lower=state.deriv_lower_bound())
    while True:
        lo, hi = rb.bounds()
        if lo == hi:
            z = lo
        else:
            z = lo if rb.halvings % 2 == 0 else hi
        ok = not state.in_frozen_set(z, T_n)
        if ok and g_n is not None and g_n.eval(z) == y_n:
            ok = False
        if ok:
            prod = correction.eval(z)
            if prod != 0:
                eps = (y_n - state.f.eval(z)) / prod
                if abs(eps) <= eps_bound:
                    witness = None
                    if g_n is not None:
                        witness = {"g_index": n, "point": rat_str(z),
                                   "f_value": rat_str(y_n),
                                   "g_value": rat_str(g_n.eval(z))}
                    return z, eps, witness
        if lo == hi:
            raise StageInfeasible("exact preimage rejected and no perturbation")
        rb.halve()


def count_points(f: Poly, T: int, at_least: int | None = None) -> int:
    """#{q : H(q) <= T, H(f(q)) <= T}, exactly; early exit at ``at_least``."""
    count = 0
    for q in iter_unit_rationals(T):
        if height_H(f.eval(q)) <= T:
            count += 1
            if at_least is not None and count >= at_least:
                return count
    return count


def count_at_least(f: Poly, T: int, threshold: int) -> int:
    """Verified lower bound: counts in enumeration order, stops at threshold."""
    if threshold <= 0:
        return 0
    return count_points(f, T, at_least=threshold)


def count_Cf(state: PilaState, T: int) -> int:
    """Exact count at threshold T <= T_n (the map is frozen there)."""
    if not state.T_list or T > state.T_list[-1]:
        raise StageTooShallow(f"T={T} exceeds the last frozen threshold")
    return count_points(state.f, T)


def count_Cf_at_least(state: PilaState, T: int, threshold: int) -> int:
    if not state.T_list or T > state.T_list[-1]:
        raise StageTooShallow(f"T={T} exceeds the last frozen threshold")
    return count_at_least(state.f, T, threshold)


def run_pila(stages: int, slow: SlowFunction,
             avoid: AvoidFamily | None = None,
             y_enum=None) -> tuple[PilaState, Trace]:
    """Run stages 0..stages inclusive and emit the trace."""
    if stages < 0:
        raise ValueError("stages must be >= 0")
    avoid = default_family() if avoid is None else avoid
    state = PilaState(avoid, y_enum)
    for _ in range(stages + 1):
        pila_step(state, slow)
    config = {
        "mode": "pila",
        "stages": stages,
        "x_enum": "lex",
        "y_enum": "lex" if state.y_enum is lex_enumerate else "custom",
        "slow": slow.descriptor(),
        "avoid": avoid.to_json(),
    }
    trace = Trace(mode="pila", config=config, stages=list(state.records))
    return state, trace
