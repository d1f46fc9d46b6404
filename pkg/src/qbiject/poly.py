"""Exact polynomials over the rationals, tuned for big-integer workloads.

A polynomial is stored as integer coefficients over one shared positive
denominator (content-reduced), so construction-heavy callers never pay for
per-coefficient gcd normalization.  The rational coefficient view is always
available and canonical.

The module also houses the exact monotone inversion machinery: a bracketing
refiner that bisects with a sound fixed-point filter for ordinary widths and
switches to exactly-verified Newton steps when a caller asks for widths in
the millions of bits.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import gmpy2
from gmpy2 import mpq, mpz

from .errors import DuplicateNode, NotBracketed, NotMonotone, PoleInUnit
from .ratcore import Rat, rat_str, parse_rat

_Z0 = mpz(0)
_Z1 = mpz(1)


class Poly:
    """Dense univariate polynomial with exact rational coefficients."""

    __slots__ = ("_c", "_den")

    def __init__(self, coeffs: Iterable = ()):
        """Build from rational-like coefficients, lowest degree first."""
        qs = [mpq(c) for c in coeffs]
        den = _Z1
        for q in qs:
            den = gmpy2.lcm(den, q.denominator)
        self._c = _strip([q.numerator * (den // q.denominator) for q in qs])
        self._den = den
        self._normalize()

    # -- construction helpers ------------------------------------------------

    @classmethod
    def _raw(cls, ints: Sequence, den) -> "Poly":
        p = cls.__new__(cls)
        p._c = _strip([mpz(v) for v in ints])
        p._den = mpz(den)
        p._normalize()
        return p

    @classmethod
    def zero(cls) -> "Poly":
        return cls._raw((), 1)

    @classmethod
    def constant(cls, q) -> "Poly":
        q = mpq(q)
        return cls._raw((q.numerator,), q.denominator)

    @classmethod
    def identity(cls) -> "Poly":
        return cls._raw((0, 1), 1)

    def _normalize(self) -> None:
        if not self._c:
            self._den = _Z1
            return
        g = self._den
        for c in self._c:
            g = gmpy2.gcd(g, c)
            if g == 1:
                return
        self._c = tuple(c // g for c in self._c)
        self._den = self._den // g

    # -- views ---------------------------------------------------------------

    @property
    def degree(self) -> int:
        """Index of the last nonzero coefficient; -1 for the zero polynomial."""
        return len(self._c) - 1

    def is_zero(self) -> bool:
        return not self._c

    @property
    def coeffs(self) -> tuple:
        """Canonical rational coefficients, lowest degree first."""
        return tuple(mpq(c, self._den) for c in self._c)

    def coeff(self, i: int) -> Rat:
        if 0 <= i < len(self._c):
            return mpq(self._c[i], self._den)
        return mpq(0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poly):
            return NotImplemented
        return self._c == other._c and self._den == other._den

    def __hash__(self):
        return hash((self._c, self._den))

    def __repr__(self) -> str:
        if self.is_zero():
            return "Poly(0)"
        return "Poly([" + ", ".join(rat_str(c) for c in self.coeffs) + "])"

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            other = Poly.constant(other)
        den = gmpy2.lcm(self._den, other._den)
        ma, mb = den // self._den, den // other._den
        n = max(len(self._c), len(other._c))
        out = [_Z0] * n
        for i, c in enumerate(self._c):
            out[i] += c * ma
        for i, c in enumerate(other._c):
            out[i] += c * mb
        return Poly._raw(out, den)

    def __neg__(self) -> "Poly":
        return Poly._raw([-c for c in self._c], self._den)

    def __sub__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            other = Poly.constant(other)
        return self + (-other)

    def __mul__(self, other) -> "Poly":
        if isinstance(other, Poly):
            if self.is_zero() or other.is_zero():
                return Poly.zero()
            out = [_Z0] * (len(self._c) + len(other._c) - 1)
            for i, a in enumerate(self._c):
                for j, b in enumerate(other._c):
                    out[i + j] += a * b
            return Poly._raw(out, self._den * other._den)
        q = mpq(other)
        if q == 0:
            return Poly.zero()
        return Poly._raw([c * q.numerator for c in self._c],
                         self._den * q.denominator)

    __rmul__ = __mul__

    def mul_linear(self, root) -> "Poly":
        """Multiply by the monic linear factor (x - root)."""
        r = mpq(root)
        if self.is_zero():
            return Poly.zero()
        rn, rd = r.numerator, r.denominator
        out = [_Z0] * (len(self._c) + 1)
        for i, c in enumerate(self._c):  # (x - rn/rd): shift*rd - rn, den *= rd
            out[i + 1] += c * rd
            out[i] -= c * rn
        return Poly._raw(out, self._den * rd)

    def derivative(self) -> "Poly":
        if self.degree < 1:
            return Poly.zero()
        return Poly._raw([i * c for i, c in enumerate(self._c)][1:], self._den)

    # -- evaluation ----------------------------------------------------------

    def __call__(self, q) -> Rat:
        return self.eval(q)

    def eval(self, q) -> Rat:
        """Exact value at a rational point (integer Horner, one division)."""
        if self.is_zero():
            return mpq(0)
        q = mpq(q)
        u, v = q.numerator, q.denominator
        acc = self._c[-1]
        vpow = _Z1
        for c in reversed(self._c[:-1]):
            vpow *= v
            acc = acc * u + c * vpow
        return mpq(acc, self._den * vpow)

    def eval_int_at_dyadic(self, u, k: int) -> mpz:
        """Integer N with p(u/2^k) = N / (den * 2^(k*degree)); p must be nonzero."""
        u = mpz(u)
        acc = self._c[-1]
        shift = 0
        for c in reversed(self._c[:-1]):
            shift += k
            acc = acc * u + (c << shift)
        return acc

    def sup_abs_bound_unit(self) -> Rat:
        """Sum of |coefficients|: a sound upper bound for sup over [0,1] of |p|."""
        return mpq(sum(abs(c) for c in self._c), self._den)

    # -- serialization -------------------------------------------------------

    def to_json(self) -> list[str]:
        return [rat_str(c) for c in self.coeffs]

    @classmethod
    def from_json(cls, data: Sequence[str]) -> "Poly":
        return cls([parse_rat(s) for s in data])


def _strip(ints: list) -> tuple:
    while ints and ints[-1] == 0:
        ints.pop()
    return tuple(ints)


def node_product(nodes: Sequence) -> Poly:
    """Monic polynomial vanishing exactly at the given pairwise-distinct nodes."""
    seen = set()
    p = Poly.constant(1)
    for node in nodes:
        q = mpq(node)
        if q in seen:
            raise DuplicateNode(f"repeated node {q}")
        seen.add(q)
        p = p.mul_linear(q)
    return p


def derivative(p: Poly) -> Poly:
    return p.derivative()


def sup_abs_bound_unit(p: Poly) -> Rat:
    return p.sup_abs_bound_unit()


def unit_increasing_lower_bound(p: Poly) -> Rat:
    """Sound lower bound for p' on [0,1]: c0(p') minus the other |coefficients|."""
    d = p.derivative()
    if d.is_zero():
        return mpq(0)
    return mpq(d._c[0] - sum(abs(c) for c in d._c[1:]), d._den)


def _nonneg_derivative_on_unit(p: Poly) -> bool:
    d = p.derivative()
    return (not d.is_zero()) and all(c >= 0 for c in d._c)


def tail_bound(n: int) -> Rat:
    """(4/3) * 4^-n: certified bound for the tail beyond stage n.

    Equals the geometric sum of the per-stage sup bounds 4^(1-k) for k > n,
    valid for any construction whose perturbation sizes respect them.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    return mpq(4, 3 * mpz(4) ** n)


def eval_enclosure(f_n: Poly, n: int, q) -> tuple[Rat, Rat]:
    """Interval certain to contain every compatible limit value at q in [0,1]."""
    center = f_n.eval(q)
    t = tail_bound(n)
    return center - t, center + t


# ---------------------------------------------------------------------------
# Monotone inversion
# ---------------------------------------------------------------------------

_FILTER_BITS = 512          # fixed-point filter precision
_FILTER_MAX_K = _FILTER_BITS - 64
_NEWTON_THRESHOLD = 64      # switch to Newton when the target is this much finer


class _SignFilter:
    """Fixed-point evaluator deciding sign(g(u/2^k)) with a proven error budget.

    Coefficients are rounded once to 2^bits fixed point (error <= 1 ulp each);
    Horner over a point in [0,1] then accumulates at most 2 ulp per stage, so
    a verdict is only emitted when the accumulator clears the budget.
    """

    __slots__ = ("bits", "hat", "budget")

    def __init__(self, g: Poly, bits: int = _FILTER_BITS):
        self.bits = bits
        half = g._den // 2
        self.hat = [int((c << bits) + half) // int(g._den) for c in g._c]
        self.budget = 2 * (len(g._c) + 2)

    def sign(self, u, k: int):
        """-1/+1 when certain, None when the value is too close to zero."""
        if k > _FILTER_MAX_K:
            return None
        u = int(u)
        acc = self.hat[-1]
        for c in reversed(self.hat[:-1]):
            acc = ((acc * u) >> k) + c
        if acc > self.budget:
            return 1
        if acc < -self.budget:
            return -1
        return None


class RootBracket:
    """Exactly verified dyadic bracket around the unique root of g in [0,1].

    Invariant: g(lo) <= 0 <= g(hi) with lo = a/2^k, hi = b/2^k (a < b), or an
    exact rational hit.  Narrowing is by midpoint bisection, filter-assisted;
    very fine targets are reached by Newton iterates that are only adopted
    after exact sign verification at both candidate endpoints, so soundness
    never depends on convergence heuristics.
    """

    def __init__(self, p: Poly, y, deriv_lower=None):
        y = mpq(y)
        lo_ok = p.eval(0) <= y
        hi_ok = y <= p.eval(1)
        if not (lo_ok and hi_ok):
            raise NotBracketed(f"{y} not in [p(0), p(1)]")
        if deriv_lower is not None and mpq(deriv_lower) > 0:
            pass
        elif unit_increasing_lower_bound(p) > 0 or _nonneg_derivative_on_unit(p):
            pass
        else:
            raise NotMonotone("no increasing-on-[0,1] certificate for p")
        self.g = p - Poly.constant(y)
        self.gp = self.g.derivative()
        self.a, self.b, self.k = mpz(0), mpz(1), 0
        self.exact: Rat | None = None
        self.halvings = 0
        self._filter = _SignFilter(self.g) if not self.g.is_zero() else None
        if self.g.eval(0) == 0:
            self.exact = mpq(0)
        elif self.g.eval(1) == 0 and self.g.eval(0) > 0:
            # cannot happen for increasing g with g(0) <= 0; defensive
            self.exact = mpq(1)

    # -- basic queries --------------------------------------------------------

    def bounds(self) -> tuple[Rat, Rat]:
        if self.exact is not None:
            return self.exact, self.exact
        return mpq(self.a, _Z1 << self.k), mpq(self.b, _Z1 << self.k)

    def width_reached(self, width_den) -> bool:
        if self.exact is not None:
            return True
        return (self.b - self.a) * mpz(width_den) <= (_Z1 << self.k)

    def _sign_at(self, u, k: int) -> int:
        """Exact sign of g at u/2^k, filter-first."""
        if self._filter is not None:
            s = self._filter.sign(u, k)
            if s is not None:
                return s
        n = self.g.eval_int_at_dyadic(u, k)
        return -1 if n < 0 else (1 if n > 0 else 0)

    # -- narrowing ------------------------------------------------------------

    def halve(self) -> None:
        """One midpoint bisection step; collapses on an exact rational hit."""
        if self.exact is not None:
            return
        a, b, k = self.a, self.b, self.k
        if b - a == 1:
            a, b, k = a << 1, b << 1, k + 1
        mid = (a + b) >> 1
        s = self._sign_at(mid, k)
        if s == 0:
            self.exact = mpq(mid, _Z1 << k)
            return
        if s < 0:
            a = mid
        else:
            b = mid
        self.a, self.b, self.k = a, b, k
        self.halvings += 1

    def refine_to(self, width_den) -> tuple[Rat, Rat]:
        """Narrow until width <= 1/width_den; returns the rational bounds."""
        width_den = mpz(width_den)
        target_bits = int(width_den.bit_length())
        while not self.width_reached(width_den):
            cur_bits = self.k - int((self.b - self.a).bit_length()) + 1
            if target_bits - cur_bits > _NEWTON_THRESHOLD and cur_bits > 16:
                if not self._newton_round(target_bits):
                    for _ in range(8):
                        self.halve()
                        if self.exact is not None:
                            break
            else:
                self.halve()
        return self.bounds()

    def _newton_round(self, target_bits: int) -> bool:
        """One exactly-verified Newton shrink; False if the candidate failed."""
        slack = 8
        wb = self.k - int((self.b - self.a).bit_length()) + 1  # width <= 2^-(wb-1)
        next_wb = min(max(2 * wb - slack, wb + 1), target_bits + 2)
        p_work = next_wb + 64
        shift = p_work - self.k
        a_l, b_l = self.a << shift, self.b << shift
        u = (a_l + b_l) >> 1
        for _ in range(2):
            step = self._newton_step(u, p_work)
            if step is None:
                return False
            u = min(max(step, a_l + 1), b_l - 1)
        r = _Z1 << (p_work - next_wb)
        clo, chi = max(u - r, a_l), min(u + r, b_l)
        if clo >= chi:
            return False
        s_lo = 0 if clo == a_l else self._sign_at(clo, p_work)
        if clo != a_l and s_lo == 0:
            self.exact = mpq(clo, _Z1 << p_work)
            return True
        if clo != a_l and s_lo > 0:
            return False
        s_hi = 0 if chi == b_l else self._sign_at(chi, p_work)
        if chi != b_l and s_hi == 0:
            self.exact = mpq(chi, _Z1 << p_work)
            return True
        if chi != b_l and s_hi < 0:
            return False
        self.a, self.b, self.k = clo, chi, p_work
        return True

    def _newton_step(self, u, p_work: int):
        ng = self.g.eval_int_at_dyadic(u, p_work)
        if self.gp.is_zero():
            return None
        np_ = self.gp.eval_int_at_dyadic(u, p_work)
        if np_ <= 0:
            return None
        num = ng * self.gp._den
        den = np_ * self.g._den
        return u - num // den


def monotone_invert(p: Poly, y, width_den, deriv_lower=None) -> tuple[Rat, Rat]:
    """Rational bracket (lo, hi) with p(lo) <= y <= p(hi) and hi-lo <= 1/width_den.

    ``p`` must carry an increasing-on-[0,1] certificate: either the caller's
    exact derivative lower bound, or one derivable from the coefficients.
    A degenerate bracket lo == hi is returned when a dyadic probe hits the
    root exactly.
    """
    if mpz(width_den) < 2:
        raise ValueError("width_den must be >= 2")
    rb = RootBracket(p, y, deriv_lower=deriv_lower)
    return rb.refine_to(width_den)


# ---------------------------------------------------------------------------
# Sturm root counting (exact, over mpq lists)
# ---------------------------------------------------------------------------

def _q_strip(c: list) -> list:
    while c and c[-1] == 0:
        c.pop()
    return c


def _q_divmod(a: list, b: list) -> tuple[list, list]:
    a = list(a)
    q = [mpq(0)] * max(len(a) - len(b) + 1, 0)
    while len(a) >= len(b) and a:
        f = a[-1] / b[-1]
        s = len(a) - len(b)
        q[s] = f
        for i, c in enumerate(b):
            a[s + i] -= f * c
        _q_strip(a)
    return _q_strip(q), a


def _q_derivative(c: list) -> list:
    return [i * v for i, v in enumerate(c)][1:]


def _q_gcd(a: list, b: list) -> list:
    a, b = list(a), list(b)
    while b:
        _, r = _q_divmod(a, b)
        a, b = b, r
    if a:
        lead = a[-1]
        a = [v / lead for v in a]
    return a


def _q_eval(c: list, x) -> Rat:
    acc = mpq(0)
    for v in reversed(c):
        acc = acc * x + v
    return acc


def _sign_variations(values: list) -> int:
    signs = [1 if v > 0 else -1 for v in values if v != 0]
    return sum(1 for s1, s2 in zip(signs, signs[1:]) if s1 != s2)


def count_roots_unit(p: Poly) -> int:
    """Number of distinct real roots of p in the closed interval [0,1]."""
    if p.is_zero():
        raise ValueError("zero polynomial vanishes everywhere")
    c = [mpq(v) for v in p.coeffs]
    if len(c) == 1:
        return 0
    sf = _q_gcd(c, _q_derivative(c))
    if len(sf) > 1:
        c, _ = _q_divmod(c, sf)
    chain = [c, _q_strip(_q_derivative(c))]
    while chain[-1]:
        _, r = _q_divmod(chain[-2], chain[-1])
        chain.append([-v for v in r])
    chain.pop()
    at0 = [_q_eval(f, mpq(0)) for f in chain]
    at1 = [_q_eval(f, mpq(1)) for f in chain]
    inside = _sign_variations(at0) - _sign_variations(at1)  # roots in (0, 1]
    return inside + (1 if _q_eval(c, mpq(0)) == 0 else 0)


# ---------------------------------------------------------------------------
# Rational functions
# ---------------------------------------------------------------------------

class RatFunc:
    """Quotient of exact polynomials, with unit-interval safety certificates."""

    __slots__ = ("num", "den", "_unit_safe")

    def __init__(self, num: Poly, den: Poly):
        if den.is_zero():
            raise ValueError("denominator polynomial is zero")
        self.num = num
        self.den = den
        self._unit_safe: bool | None = None

    def __eq__(self, other):
        if not isinstance(other, RatFunc):
            return NotImplemented
        # cross-multiplied structural equality
        return (self.num * other.den) == (other.num * self.den)

    def __repr__(self):
        return f"RatFunc({self.num!r}, {self.den!r})"

    def is_unit_safe(self) -> bool:
        """True when the denominator provably has no root in [0,1] (Sturm)."""
        if self._unit_safe is None:
            self._unit_safe = count_roots_unit(self.den) == 0
        return self._unit_safe

    def eval(self, q) -> Rat:
        q = mpq(q)
        d = self.den.eval(q)
        if d == 0:
            raise PoleInUnit(f"denominator vanishes at {q}")
        return self.num.eval(q) / d

    __call__ = eval

    def derivative_numerator(self) -> Poly:
        """Numerator of the derivative: num' * den - num * den'."""
        return self.num.derivative() * self.den - self.num * self.den.derivative()

    def certify_increasing_unit_bijection(self) -> bool:
        """Exact check: strictly increasing on [0,1] with f(0)=0 and f(1)=1."""
        if not self.is_unit_safe():
            return False
        if self.eval(0) != 0 or self.eval(1) != 1:
            return False
        w = self.derivative_numerator()
        if w.is_zero() or count_roots_unit(w) != 0:
            return False
        return self.eval(mpq(1, 2)) > self.eval(mpq(1, 4))

    def to_json(self) -> dict:
        return {"num": self.num.to_json(), "den": self.den.to_json()}

    @classmethod
    def from_json(cls, data: dict) -> "RatFunc":
        return cls(Poly.from_json(data["num"]), Poly.from_json(data["den"]))
