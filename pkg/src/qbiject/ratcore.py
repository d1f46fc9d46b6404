"""Canonical exact rationals, heights, and the height-then-value ordering of Q∩[0,1].

The ambient number type is ``gmpy2.mpq`` (aliased ``Rat``), which is always
stored in lowest terms with a positive denominator, so canonicality is a
construction invariant rather than something to re-check.  Everything here is
exact: heights are compared through integer bit lengths, never through
floating logarithms.
"""

from __future__ import annotations

import enum
from typing import Iterable, Iterator

import gmpy2
from gmpy2 import mpq, mpz

from .errors import BracketTooWide, HeightTooLarge

Rat = mpq  # canonical rational: gcd(|num|, den) = 1, den >= 1

ZERO = mpq(0)
ONE = mpq(1)

# Largest argument for which exact sieve-backed counts (farey_count,
# lex_index) are offered.  Grows lazily up to this cap.
SIEVE_CAP = 4_000_000


def rat(num, den=1) -> Rat:
    """Canonical rational from integers (or anything mpq accepts)."""
    return mpq(num, den)


def rat_str(q) -> str:
    """Serialize as ``"num/den"`` in lowest terms (e.g. ``"0/1"``, ``"-3/7"``)."""
    q = mpq(q)
    return f"{q.numerator}/{q.denominator}"


def parse_rat(text: str) -> Rat:
    """Parse ``"num/den"`` (or a bare integer string) into a canonical rational."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return mpq(mpz(num), mpz(den))
    return mpq(mpz(text))


def is_unit(q) -> bool:
    return 0 <= q <= 1


def require_unit(q) -> Rat:
    q = mpq(q)
    if not 0 <= q <= 1:
        raise ValueError(f"{q} is not in [0,1]")
    return q


def height_H(q) -> mpz:
    """max(|numerator|, denominator) of q in lowest terms."""
    q = mpq(q)
    return max(abs(q.numerator), q.denominator)


def height_bits(q) -> int:
    """Bit length of height_H(q); exact, monotone stand-in for log2 H."""
    return int(height_H(q).bit_length())


# --------------------------------------------------------------------------
# Sound certification of h(q) <= B without floating logarithms.
#
# pass requires H(q) <= 2^floor(c*B) with c < 1/ln2 (so 2^(cB) <= e^B);
# fail requires H(q) >= 2^ceil(c'*B) with c' > 1/ln2 (so 2^(c'B) > e^B).
# The narrow window between the tiers is reported as marginal, never
# silently promoted.
# --------------------------------------------------------------------------

_TIER1 = (144, 100)        # 1.44      < 1/ln2 = 1.442695...
_TIER2 = (14426, 10000)    # 1.4426    < 1/ln2
_FAIL = (14427, 10000)     # 1.4427    > 1/ln2


class Verdict(enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    MARGINAL = "marginal"


def certify_h_le(q, B) -> Verdict:
    """Soundly decide h(q) <= B for an exact integer budget B >= 0.

    Never materializes 2^B; all comparisons go through bit lengths, so B may
    be astronomically large.
    """
    B = mpz(B)
    if B < 0:
        raise ValueError("budget must be nonnegative")
    H = height_H(q)
    bits_le = int((H - 1).bit_length())  # H <= 2^k  iff  bits_le <= k
    if bits_le <= (_TIER1[0] * B) // _TIER1[1]:
        return Verdict.PASS
    if bits_le <= (_TIER2[0] * B) // _TIER2[1]:
        return Verdict.PASS
    k_fail = -((-_FAIL[0] * B) // _FAIL[1])  # ceil(c'B)
    if int(H.bit_length()) >= k_fail + 1 or H == mpz(1) << int(k_fail):
        return Verdict.FAIL
    return Verdict.MARGINAL


def certify_h_le_lower_budget(q, B_lower) -> Verdict:
    """One-sided variant: certify h(q) <= B given only a lower bound for B.

    PASS is sound (a budget >= B_lower only loosens the inequality); anything
    else is reported MARGINAL because the exact budget is not available.
    """
    B_lower = mpz(B_lower)
    H = height_H(q)
    if int((H - 1).bit_length()) <= (_TIER1[0] * B_lower) // _TIER1[1]:
        return Verdict.PASS
    return Verdict.MARGINAL


def passes_tier1(q, B) -> bool:
    """True when h(q) <= B certifies already at the coarse first tier."""
    B = mpz(B)
    H = height_H(q)
    return int((H - 1).bit_length()) <= (_TIER1[0] * B) // _TIER1[1]


# --------------------------------------------------------------------------
# Lexicographic (height, value) ordering and enumeration of Q∩[0,1]
# --------------------------------------------------------------------------

def lex_key(q):
    """Sort key realizing the ordering: first by height, ties by value."""
    q = mpq(q)
    return (height_H(q), q)


def lex_cmp(q1, q2) -> int:
    """-1, 0, +1 for the height-then-value order. Both args must be in [0,1]."""
    k1, k2 = lex_key(require_unit(q1)), lex_key(require_unit(q2))
    if k1 < k2:
        return -1
    if k1 > k2:
        return 1
    return 0


def _level_numerators(k: int) -> Iterator[int]:
    """Numerators of the reduced fractions with denominator k inside (0,1)."""
    for a in range(1, k):
        if gmpy2.gcd(a, k) == 1:
            yield a


class LexCursor:
    """Stateful generator of x_0=0, x_1=1, x_2=1/2, ... with no repeats or gaps."""

    __slots__ = ("next_index", "current_H", "_pending")

    def __init__(self):
        self.next_index = 0
        self.current_H = 1
        self._pending: list[Rat] = [ONE, ZERO]  # popped from the end

    def __iter__(self):
        return self

    def __next__(self) -> Rat:
        while not self._pending:
            self.current_H += 1
            k = self.current_H
            self._pending = [mpq(a, k) for a in _level_numerators(k)]
            self._pending.reverse()
        self.next_index += 1
        return self._pending.pop()


_lex_cache: list[Rat] = []
_lex_cursor = LexCursor()


def lex_enumerate(n: int) -> Rat:
    """n-th element of the enumeration (0-based); successive n cover Q∩[0,1]."""
    if n < 0:
        raise ValueError("index must be nonnegative")
    while len(_lex_cache) <= n:
        _lex_cache.append(next(_lex_cursor))
    return _lex_cache[n]


# --------------------------------------------------------------------------
# Totient sieve, Farey counting, exact inverse of the enumeration
# --------------------------------------------------------------------------

_phi_prefix: list[int] = [0, 1]  # _phi_prefix[k] = sum_{i<=k} phi(i)
_spf: list[int] = [0, 1]         # smallest prime factor


def _ensure_sieve(K: int) -> None:
    global _phi_prefix, _spf
    if K < len(_phi_prefix):
        return
    if K > SIEVE_CAP:
        raise HeightTooLarge(f"exact counts capped at {SIEVE_CAP}, got {K}")
    limit = min(SIEVE_CAP, max(K, 2 * (len(_phi_prefix) - 1), 1 << 12))
    phi = list(range(limit + 1))
    spf = [0] * (limit + 1)
    for p in range(2, limit + 1):
        if phi[p] == p:  # p prime
            for m in range(p, limit + 1, p):
                phi[m] -= phi[m] // p
                if spf[m] == 0:
                    spf[m] = p
    spf[1] = 1
    prefix = [0] * (limit + 1)
    acc = 0
    for k in range(1, limit + 1):
        acc += phi[k]
        prefix[k] = acc
    _phi_prefix = prefix
    _spf = spf


def totient_prefix(K: int) -> int:
    """Sum of Euler's totient over 1..K (exact, sieve-backed)."""
    if K < 1:
        return 0
    _ensure_sieve(K)
    return _phi_prefix[K]


def farey_count(K) -> int:
    """#{q in Q∩[0,1] : H(q) <= K} = 1 + sum_{k<=K} phi(k)."""
    K = int(K)
    if K < 1:
        raise ValueError("K must be >= 1")
    return 1 + totient_prefix(K)


def _distinct_primes(n: int) -> list[int]:
    _ensure_sieve(n)
    out = []
    while n > 1:
        p = _spf[n]
        out.append(p)
        while n % p == 0:
            n //= p
    return out


def count_coprime_upto(n: int, x: int) -> int:
    """#{1 <= a <= x : gcd(a, n) = 1}, by inclusion-exclusion on primes of n."""
    if x <= 0:
        return 0
    primes = _distinct_primes(n)
    total = 0
    for mask in range(1 << len(primes)):
        d = 1
        bits = 0
        m = mask
        i = 0
        while m:
            if m & 1:
                d *= primes[i]
                bits += 1
            m >>= 1
            i += 1
        total += (-1) ** bits * (x // d)
    return total


def lex_index(q) -> int:
    """Exact inverse of lex_enumerate.

    For q strictly inside (0,1) the index is
    farey_count(D(q)-1) + #{a < N(q) : gcd(a, D(q)) = 1}.
    Raises HeightTooLarge beyond the sieve cap; callers that only need
    order comparisons should use lex_key instead.
    """
    q = require_unit(q)
    if q == 0:
        return 0
    if q == 1:
        return 1
    if q.denominator > SIEVE_CAP:
        raise HeightTooLarge(
            f"lex_index capped at H <= {SIEVE_CAP}; "
            f"got a {q.denominator.bit_length()}-bit denominator")
    den = int(q.denominator)
    return farey_count(den - 1) + count_coprime_upto(den, int(q.numerator) - 1)


def iter_unit_rationals(max_H: int) -> Iterator[Rat]:
    """All of Q∩[0,1] with height <= max_H, in enumeration order."""
    yield ZERO
    yield ONE
    for k in range(2, max_H + 1):
        for a in _level_numerators(k):
            yield mpq(a, k)


# --------------------------------------------------------------------------
# Grid approximation and minimal-denominator search
# --------------------------------------------------------------------------

def bounded_rational_near(bracket, M, side: str) -> Rat:
    """Grid point of denominator <= M adjacent to a tightly bracketed target.

    ``bracket`` is a rational interval (lo, hi) of width < 1/(2M) known to
    contain the target; ``side`` selects floor(M*lo)/M (``"below"``) or
    ceil(M*hi)/M (``"above"``).  The result never crosses the bracket.
    """
    lo, hi = mpq(bracket[0]), mpq(bracket[1])
    M = mpz(M)
    if M < 1:
        raise ValueError("M must be >= 1")
    if not 0 <= lo <= hi <= 1:
        raise ValueError("bracket must be a subinterval of [0,1]")
    if 2 * M * (hi - lo) >= 1:
        raise BracketTooWide(f"bracket width {hi - lo} >= 1/(2*{M})")
    if side == "below":
        z = mpq((M * lo.numerator) // lo.denominator, M)
    elif side == "above":
        z = mpq(-((-M * hi.numerator) // hi.denominator), M)
    else:
        raise ValueError("side must be 'below' or 'above'")
    return z


def simplest_in_interval(lo, hi) -> Rat:
    """Rational with the smallest denominator in the closed interval [lo, hi].

    Classic continued-fraction descent (iterative: bracket endpoints can have
    very deep expansions); among minimal-denominator candidates the smallest
    value is returned, so the result is deterministic.
    """
    a, b = mpq(lo), mpq(hi)
    if a > b:
        raise ValueError("empty interval")
    coeffs = []
    while True:
        ceil_a = -((-a.numerator) // a.denominator)
        if ceil_a <= b:
            coeffs.append(ceil_a)
            break
        floor_a = a.numerator // a.denominator
        coeffs.append(floor_a)
        a, b = 1 / (b - floor_a), 1 / (a - floor_a)
    value = mpq(coeffs[-1])
    for c in reversed(coeffs[:-1]):
        value = c + 1 / value
    return value
