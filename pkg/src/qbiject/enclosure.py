"""Sound rational enclosures for the few irrational quantities the repo needs.

Everything is computed with exact rational series plus explicit tail bounds,
rounded outward; no floating point is involved.  Default working precision is
64 fractional bits, far more than any consumer's tolerance requires.
"""

from __future__ import annotations

import gmpy2
from gmpy2 import mpq, mpz

DEFAULT_BITS = 64


def _atanh_recip_enclosure(x: int, bits: int) -> tuple[mpq, mpq]:
    """Enclosure of atanh(1/x) = sum_{i>=0} x^-(2i+1)/(2i+1) for integer x >= 2.

    All terms are positive; a truncation is a lower bound and the geometric
    tail sum_{i>N} <= x^-(2N+3) / ((2N+3)(1 - x^-2)) closes the upper bound.
    """
    target = mpq(1, mpz(1) << (bits + 4))
    w2 = mpq(1, x * x)
    term = mpq(1, x)
    total = mpq(0)
    i = 0
    while True:
        total += term / (2 * i + 1)
        term *= w2
        i += 1
        tail = (term / (2 * i + 1)) / (1 - w2)
        if tail < target:
            return total, total + tail


def _atan_recip_enclosure(x: int, bits: int) -> tuple[mpq, mpq]:
    """Enclosure of atan(1/x) for integer x >= 2, via the alternating series.

    With decreasing alternating terms, a partial sum is within the first
    omitted term of the limit, so (s - t_next, s + t_next) is sound.
    """
    target = mpq(1, mpz(1) << (bits + 4))
    w2 = mpq(1, x * x)
    power = mpq(1, x)
    s = mpq(0)
    i = 0
    while True:
        s = s + power / (2 * i + 1) if i % 2 == 0 else s - power / (2 * i + 1)
        power *= w2
        i += 1
        t_next = power / (2 * i + 1)
        if t_next < target:
            return s - t_next, s + t_next


_ln2_cache: dict[int, tuple[mpq, mpq]] = {}
_pi_cache: dict[int, tuple[mpq, mpq]] = {}


def ln2_enclosure(bits: int = DEFAULT_BITS) -> tuple[mpq, mpq]:
    """Rational (lo, hi) with lo <= ln 2 <= hi, via ln 2 = 2 atanh(1/3)."""
    if bits not in _ln2_cache:
        lo, hi = _atanh_recip_enclosure(3, bits)
        _ln2_cache[bits] = (2 * lo, 2 * hi)
    return _ln2_cache[bits]


def pi_enclosure(bits: int = DEFAULT_BITS) -> tuple[mpq, mpq]:
    """Rational (lo, hi) with lo <= pi <= hi (Machin: 16 atan 1/5 - 4 atan 1/239)."""
    if bits not in _pi_cache:
        lo5, hi5 = _atan_recip_enclosure(5, bits)
        lo239, hi239 = _atan_recip_enclosure(239, bits)
        _pi_cache[bits] = (16 * lo5 - 4 * hi239, 16 * hi5 - 4 * lo239)
    return _pi_cache[bits]


def ln_enclosure(q, bits: int = DEFAULT_BITS) -> tuple[mpq, mpq]:
    """Rational (lo, hi) with lo <= ln q <= hi, for rational q > 0.

    Decomposes q = 2^e * r with r in [1, 2) and uses
    ln r = 2 atanh((r-1)/(r+1)), whose argument lies in [0, 1/3).
    """
    q = mpq(q)
    if q <= 0:
        raise ValueError("ln requires a positive argument")
    e = 0
    while q >= 2:
        q /= 2
        e += 1
    while q < 1:
        q *= 2
        e -= 1
    l2lo, l2hi = ln2_enclosure(bits)
    if q == 1:
        frac_lo = frac_hi = mpq(0)
    else:
        w = (q - 1) / (q + 1)
        target = mpq(1, mpz(1) << (bits + 4))
        w2 = w * w
        term = w
        total = mpq(0)
        i = 0
        while True:
            total += term / (2 * i + 1)
            term *= w2
            i += 1
            tail = (term / (2 * i + 1)) / (1 - w2)
            if tail < target:
                break
        frac_lo, frac_hi = 2 * total, 2 * (total + tail)
    if e >= 0:
        return e * l2lo + frac_lo, e * l2hi + frac_hi
    return e * l2hi + frac_lo, e * l2lo + frac_hi


def sqrt_enclosure(n, bits: int = DEFAULT_BITS) -> tuple[mpq, mpq]:
    """Rational (lo, hi) with lo <= sqrt(n) <= hi for a nonnegative integer n."""
    n = mpz(n)
    if n < 0:
        raise ValueError("sqrt requires a nonnegative argument")
    scaled = n << (2 * bits)
    root = gmpy2.isqrt(scaled)
    denom = mpz(1) << bits
    lo = mpq(root, denom)
    hi = mpq(root + 1, denom) if root * root != scaled else lo
    return lo, hi
