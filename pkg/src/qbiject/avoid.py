"""Families of rational maps that a construction must provably differ from.

Two one-parameter families of degree-one rational bijections of [0,1] are
provided (the increasing family fixing 0 and 1, and the decreasing family
swapping them); both are unit-safe exactly when the parameter is < 1.  A
family is just an ordered list of exact rational functions, consumed one per
avoidance opportunity and certified pointwise by exact comparison.
"""

from __future__ import annotations

import json
from pathlib import Path

from gmpy2 import mpq

from .errors import ParseError, PoleInUnit
from .poly import Poly, RatFunc
from .ratcore import Rat, rat_str


def _lft_denominator(a) -> Poly:
    a = mpq(a)
    return Poly([1 - a, a])  # a*x + (1-a); value 1 at x=1, 1-a at x=0


def _require_no_unit_pole(a) -> None:
    # a*x + (1-a) has its root at (a-1)/a, inside [0,1] exactly when a >= 1
    if mpq(a) >= 1:
        raise PoleInUnit(f"parameter {mpq(a)} puts a pole inside [0,1]")


def lft_first(a) -> RatFunc:
    """Increasing LFT bijection of [0,1]:  x / (a*x + (1-a)),  a < 1."""
    _require_no_unit_pole(a)
    return RatFunc(Poly.identity(), _lft_denominator(a))


def lft_second(a) -> RatFunc:
    """Decreasing LFT bijection of [0,1]:  (a-1)(x-1) / (a*x + (1-a)),  a < 1."""
    _require_no_unit_pole(a)
    a = mpq(a)
    return RatFunc(Poly([1 - a, a - 1]), _lft_denominator(a))  # (a-1)x - (a-1)


def lft_eval(a, q, family: str) -> Rat:
    """Exact value of the selected family member at q in [0,1]."""
    if family == "first":
        func = lft_first(a)
    elif family == "second":
        func = lft_second(a)
    else:
        raise ValueError("family must be 'first' or 'second'")
    q = mpq(q)
    if not 0 <= q <= 1:
        raise ValueError(f"{q} outside [0,1]")
    return func.eval(q)


def lft_inverse(a, family: str) -> RatFunc:
    """Closed-form inverse, again an LFT (the decreasing family is an involution)."""
    a = mpq(a)
    _require_no_unit_pole(a)
    if family == "first":
        # y = x/(ax+1-a)  =>  x = (1-a) y / (1 - a y)
        return RatFunc(Poly([0, 1 - a]), Poly([1, -a]))
    if family == "second":
        return lft_second(a)
    raise ValueError("family must be 'first' or 'second'")


# Parameters of the default avoid family: the identity first (a = 0), then
# small-height parameters of the increasing family in height-then-value order.
_DEFAULT_PARAMS = (
    "0", "-1", "-2", "-1/2", "1/2", "-3", "-3/2", "-2/3", "-1/3", "1/3", "2/3",
    "-4", "-4/3", "-3/4", "-1/4", "1/4", "3/4", "-5", "-5/2", "-5/3", "-5/4",
    "-2/5", "-1/5", "1/5", "2/5", "3/5", "4/5", "-6", "-6/5", "-5/6", "-1/6",
    "1/6",
)


class AvoidFamily:
    """Ordered, exactly evaluable family of unit-safe rational functions."""

    def __init__(self, funcs: list[RatFunc]):
        for i, f in enumerate(funcs):
            if not f.is_unit_safe():
                raise ValueError(f"family member {i} has a pole in [0,1]")
        self.funcs = list(funcs)

    def __len__(self) -> int:
        return len(self.funcs)

    def get(self, t: int) -> RatFunc | None:
        """t-th member, or None once the family is exhausted."""
        if 0 <= t < len(self.funcs):
            return self.funcs[t]
        return None

    def increasing_subfamily(self) -> "AvoidFamily":
        """Members certified as strictly increasing bijections of [0,1].

        A strictly increasing limit map automatically differs from everything
        this filter drops, so consuming only the surviving members loses no
        avoidance strength.
        """
        return AvoidFamily(
            [f for f in self.funcs if f.certify_increasing_unit_bijection()]
        )

    def to_json(self) -> list[dict]:
        return [f.to_json() for f in self.funcs]

    @classmethod
    def from_json(cls, data) -> "AvoidFamily":
        try:
            return cls([RatFunc.from_json(item) for item in data])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad avoid-family data: {exc}") from exc

    @classmethod
    def load(cls, path) -> "AvoidFamily":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read avoid family {path}: {exc}") from exc
        return cls.from_json(data)

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
            + "\n"
        )


def default_family() -> AvoidFamily:
    """Shipped default: 32 increasing LFT bijections, identity first."""
    return AvoidFamily([lft_first(mpq(p)) for p in _DEFAULT_PARAMS])
