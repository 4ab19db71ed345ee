"""Real roots of univariate polynomials with rational coefficients.

Polynomials are coefficient lists in increasing degree. Root counting uses
Sturm sequences of the square-free part, so it is exact; root locations
are refined by bisection on exact rationals.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


def trim(p: Sequence) -> list:
    p = [Fraction(c) for c in p]
    while p and p[-1] == 0:
        p.pop()
    return p


def degree(p: Sequence) -> int:
    return len(trim(p)) - 1


def evaluate(p: Sequence, x) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def derivative(p: Sequence) -> list:
    return trim([k * c for k, c in enumerate(p)][1:])


def divmod_(a: Sequence, b: Sequence) -> tuple[list, list]:
    a, b = trim(a), trim(b)
    if not b:
        raise ZeroDivisionError("division by the zero polynomial")
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 0)
    r = list(a)
    lb = b[-1]
    while len(r) >= len(b) and r:
        k = len(r) - len(b)
        c = r[-1] / lb
        q[k] = c
        for j, bj in enumerate(b):
            r[j + k] -= c * bj
        r = trim(r)
    return q, r


def gcd(a: Sequence, b: Sequence) -> list:
    a, b = trim(a), trim(b)
    while b:
        _, r = divmod_(a, b)
        a, b = b, r
    if not a:
        return []
    return [c / a[-1] for c in a]


def squarefree(p: Sequence) -> list:
    p = trim(p)
    if len(p) <= 2:
        return p
    g = gcd(p, derivative(p))
    if len(g) <= 1:
        return p
    q, _ = divmod_(p, g)
    return q


def sturm_sequence(p: Sequence) -> list:
    seq = [trim(p), derivative(p)]
    while seq[-1]:
        _, r = divmod_(seq[-2], seq[-1])
        if not r:
            break
        seq.append([-c for c in r])
    return [s for s in seq if s]


def _sign_changes(seq, x) -> int:
    signs = [evaluate(s, x) for s in seq]
    signs = [s for s in signs if s != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if (a > 0) != (b > 0))


def root_bound(p: Sequence) -> Fraction:
    """Cauchy bound: every real root lies in ``(-B, B)``."""
    p = trim(p)
    lead = abs(p[-1])
    return 1 + max((abs(c) / lead for c in p[:-1]), default=Fraction(0))


def count_roots(p: Sequence, lo=None, hi=None) -> int:
    """Number of distinct real roots in ``(lo, hi]`` (whole line by default)."""
    p = squarefree(p)
    if len(p) <= 1:
        return 0
    B = root_bound(p)
    lo = -B if lo is None else Fraction(lo)
    hi = B if hi is None else Fraction(hi)
    seq = sturm_sequence(p)
    return _sign_changes(seq, lo) - _sign_changes(seq, hi)


def isolate(p: Sequence) -> list:
    """Disjoint intervals ``(lo, hi]`` each holding exactly one real root."""
    p = squarefree(p)
    if len(p) <= 1:
        return []
    seq = sturm_sequence(p)
    B = root_bound(p)
    out = []
    stack = [(-B, B)]
    while stack:
        lo, hi = stack.pop()
        k = _sign_changes(seq, lo) - _sign_changes(seq, hi)
        if k == 0:
            continue
        if k == 1:
            out.append((lo, hi))
            continue
        mid = (lo + hi) / 2
        stack.append((mid, hi))
        stack.append((lo, mid))
    return sorted(out)


def refine(p: Sequence, lo: Fraction, hi: Fraction, tol=Fraction(1, 10**12)) -> tuple:
    """Shrink an isolating interval of a square-free ``p`` below ``tol``."""
    p = squarefree(p)
    if evaluate(p, hi) == 0:
        return hi, hi
    sign_hi = evaluate(p, hi) > 0
    while hi - lo > tol:
        mid = (lo + hi) / 2
        v = evaluate(p, mid)
        if v == 0:
            return mid, mid
        if (v > 0) == sign_hi:
            hi = mid
        else:
            lo = mid
    return lo, hi


def real_roots(p: Sequence, tol=Fraction(1, 10**12)) -> list:
    """Approximations (as Fractions) of the distinct real roots, ascending."""
    out = []
    for lo, hi in isolate(p):
        a, b = refine(p, lo, hi, tol)
        out.append((a + b) / 2)
    return out


def rational_root_near(p: Sequence, approx: Fraction, max_den: int = 10**6) -> Fraction | None:
    """An exact rational root close to ``approx``, if there is one."""
    cand = Fraction(approx).limit_denominator(max_den)
    if evaluate(p, cand) == 0:
        return cand
    return None


def nearest_roots(p: Sequence, tol=Fraction(1, 10**10)) -> tuple:
    """Largest negative and smallest positive real roots (None when absent).

    A root at exactly 0 is reported on both sides.
    """
    p = trim(p)
    if len(p) <= 1:
        return None, None
    if p[0] == 0:
        return Fraction(0), Fraction(0)
    neg = pos = None
    for lo, hi in isolate(p):
        a, b = refine(p, lo, hi, tol)
        r = (a + b) / 2 if a != b else a
        if b <= 0 or r < 0:
            neg = r
        elif pos is None:
            pos = r
    return neg, pos
