"""Independent brute-force oracles built on fractions.Fraction.

Deliberately separate from the package: plain Fraction arithmetic, dense
polynomial expansion at every step, no incremental state, no shared helper
code.  Used to pin expected values and to cross-check entire runs bit for
bit at small depth.
"""

from fractions import Fraction
from math import gcd


# -- enumeration ------------------------------------------------------------

def brute_enumeration(count):
    """First ``count`` elements of the height-then-value order, by sorting."""
    out = [Fraction(0), Fraction(1)]
    k = 1
    while len(out) < count:
        k += 1
        out.extend(Fraction(a, k) for a in range(1, k) if gcd(a, k) == 1)
    # per-level extensions are already value-sorted, so out is fully ordered
    return out[:count]


def brute_farey_count(K):
    total = 2 if K >= 1 else 0
    for den in range(2, K + 1):
        total += sum(1 for num in range(1, den) if gcd(num, den) == 1)
    return total


# -- polynomial helpers (dense Fraction lists, lowest degree first) ---------

def p_add(a, b):
    n = max(len(a), len(b))
    out = [Fraction(0)] * n
    for i, c in enumerate(a):
        out[i] += c
    for i, c in enumerate(b):
        out[i] += c
    return out


def p_scale(a, s):
    return [c * s for c in a]


def p_mul_linear(a, root):
    out = [Fraction(0)] * (len(a) + 1)
    for i, c in enumerate(a):
        out[i + 1] += c
        out[i] -= c * root
    return out


def p_eval(a, x):
    acc = Fraction(0)
    for c in reversed(a):
        acc = acc * x + c
    return acc


def expand_node_product(nodes):
    poly = [Fraction(1)]
    for r in nodes:
        poly = p_mul_linear(poly, Fraction(r))
    return poly


# -- full replay of the alternating construction ----------------------------

def _lft_value(a, x):
    a, x = Fraction(a), Fraction(x)
    return x / (a * x + (1 - a))


def _bisect_even(nodes, f_poly, y, n):
    """Even-step node choice, re-derived from scratch with Fractions."""
    lo, hi = Fraction(0), Fraction(1)

    def sgn(x):
        v = p_eval(f_poly, x) - y
        return (v > 0) - (v < 0)

    exact = None
    halvings = 0

    def halve():
        nonlocal lo, hi, exact, halvings
        mid = (lo + hi) / 2
        s = sgn(mid)
        if s == 0:
            exact = mid
        elif s < 0:
            lo = mid
        else:
            hi = mid
        halvings += 1

    # shrink until no node is inside the closed bracket
    while exact is None:
        if any(lo <= v <= hi for v in nodes):
            halve()
        else:
            break
    if exact is None:
        below = max(v for v in nodes if v < lo)
        above = min(v for v in nodes if v > hi)
        recip = Fraction(1)
        for v in nodes:
            recip /= (lo - v) if v < lo else (v - hi)
        c_int = -((-abs(recip).numerator) // abs(recip).denominator)
        width_target = Fraction(1, 4 ** (n - 1) * n * c_int)
        while hi - lo > width_target and exact is None:
            halve()
    bound = Fraction(1, n * 4 ** (n - 1))
    prod_poly = expand_node_product(nodes)
    while True:
        if exact is not None:
            return exact, Fraction(0), halvings
        if (lo - below) >= (above - hi):
            z = lo
        else:
            z = hi
        if z in nodes:
            halve()
            continue
        h = (y - p_eval(f_poly, z)) / p_eval(prod_poly, z)
        if abs(h) < bound:
            return z, n * h, halvings
        halve()


def brute_basic_replay(depth, avoid_params):
    """Replay the whole run with full expansion; returns (nodes, values, eps).

    avoid_params are the parameters of the increasing degree-one family used
    as the default avoid list.
    """
    xs = brute_enumeration(4 * depth + 16)
    nodes = [Fraction(0), Fraction(1), Fraction(1, 2)]
    values = [Fraction(0), Fraction(1), Fraction(1, 2)]
    eps = [Fraction(1), Fraction(0)]
    m = 2
    y_cursor = 3
    while m < depth:
        n = m + 1
        f_poly = [Fraction(0), Fraction(1)]
        for k in range(3, n):
            term = p_scale(expand_node_product(nodes[: k]), eps[k - 1] / k)
            f_poly = p_add(f_poly, term)
        if n % 2 == 1:
            a = 0
            while xs[a] in nodes:
                a += 1
            x_a = xs[a]
            f_at = p_eval(f_poly, x_a)
            prod = p_eval(expand_node_product(nodes), x_a)
            t = (n - 3) // 2
            g_val = (_lft_value(avoid_params[t], x_a)
                     if t < len(avoid_params) else None)
            for s in range(n + 2):
                e = Fraction(s, (n + 1) * 4 ** (n - 1))
                z = f_at + e / n * prod
                if z in values or (g_val is not None and z == g_val):
                    continue
                break
            nodes.append(x_a)
            values.append(z)
            eps.append(e)
        else:
            b = y_cursor
            while xs[b] in values:
                b += 1
            y_b = xs[b]
            z, e, _ = _bisect_even(nodes, f_poly, y_b, n)
            nodes.append(z)
            values.append(y_b)
            eps.append(e)
            y_cursor = b + 1
        m = n
    return nodes, values, eps


def geometric_tail(n, terms=48):
    """sum_{k=n+1..n+terms} 4^(1-k), plus the exact closed-form residue."""
    partial = sum(Fraction(4) ** (1 - k) for k in range(n + 1, n + terms + 1))
    residue = Fraction(4, 3 * 4 ** (n + terms))
    return partial, residue
