"""Sparse multivariate polynomials over the rationals.

A monomial is a tuple of ``(JetVar, exponent)`` pairs sorted by variable;
a polynomial maps monomials to nonzero :class:`~fractions.Fraction`
coefficients. The leading monomial is the largest one in lexicographic
order with the largest variable weighted first; :func:`gcd` returns a
polynomial whose leading coefficient is 1.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .jetvar import JetVar

Monomial = tuple  # tuple[tuple[JetVar, int], ...]

_ONE_MONO: Monomial = ()


class NotDivisible(ArithmeticError):
    pass


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    out = []
    i = j = 0
    la, lb = len(a), len(b)
    while i < la and j < lb:
        va, ea = a[i]
        vb, eb = b[j]
        if va == vb:
            out.append((va, ea + eb))
            i += 1
            j += 1
        elif va < vb:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
    if i < la:
        out.extend(a[i:])
    if j < lb:
        out.extend(b[j:])
    return tuple(out)


def lex_key(m: Monomial):
    return m[::-1]


class Poly:
    __slots__ = ("terms", "_hash")

    def __init__(self, terms: dict | None = None):
        self.terms: dict = terms if terms is not None else {}
        self._hash = None

    # construction -----------------------------------------------------
    @staticmethod
    def const(c) -> "Poly":
        c = Fraction(c)
        return Poly({_ONE_MONO: c}) if c else Poly()

    @staticmethod
    def var(v: JetVar) -> "Poly":
        return Poly({((v, 1),): Fraction(1)})

    @staticmethod
    def monomial(m: Monomial, c=1) -> "Poly":
        c = Fraction(c)
        return Poly({m: c}) if c else Poly()

    # queries ----------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and _ONE_MONO in self.terms)

    def constant_value(self) -> Fraction:
        return self.terms.get(_ONE_MONO, Fraction(0))

    def variables(self) -> set:
        out = set()
        for m in self.terms:
            for v, _ in m:
                out.add(v)
        return out

    def degree(self, v: JetVar) -> int:
        d = 0
        for m in self.terms:
            for w, e in m:
                if w == v:
                    if e > d:
                        d = e
                    break
        return d

    def total_degree(self) -> int:
        return max((sum(e for _, e in m) for m in self.terms), default=0)

    def leading_monomial(self) -> Monomial:
        return max(self.terms, key=lex_key)

    def leading_coefficient(self) -> Fraction:
        if not self.terms:
            return Fraction(0)
        return self.terms[self.leading_monomial()]

    def sorted_terms(self):
        """Terms in decreasing lexicographic order."""
        return sorted(self.terms.items(), key=lambda t: lex_key(t[0]), reverse=True)

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __repr__(self) -> str:
        return f"Poly({self})"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            mono = "*".join(str(v) if e == 1 else f"{v}^{e}" for v, e in m)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts)

    # arithmetic -------------------------------------------------------
    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()})

    def __add__(self, other: "Poly") -> "Poly":
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m)
            if s is None:
                out[m] = c
            else:
                s += c
                if s:
                    out[m] = s
                else:
                    del out[m]
        return Poly(out)

    def __sub__(self, other: "Poly") -> "Poly":
        if not other.terms:
            return self
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m)
            if s is None:
                out[m] = -c
            else:
                s -= c
                if s:
                    out[m] = s
                else:
                    del out[m]
        return Poly(out)

    def __mul__(self, other: "Poly") -> "Poly":
        if not self.terms or not other.terms:
            return Poly()
        a, b = self.terms, other.terms
        if len(a) < len(b):
            a, b = b, a
        if len(b) == 1 and _ONE_MONO in b:
            c = b[_ONE_MONO]
            if c == 1:
                return self if a is self.terms else other
            return Poly({m: x * c for m, x in a.items()})
        out: dict = {}
        for mb, cb in b.items():
            for ma, ca in a.items():
                m = _mono_mul(ma, mb)
                s = out.get(m)
                if s is None:
                    out[m] = ca * cb
                else:
                    s += ca * cb
                    if s:
                        out[m] = s
                    else:
                        del out[m]
        return Poly(out)

    def scale(self, c) -> "Poly":
        c = Fraction(c)
        if not c:
            return Poly()
        if c == 1:
            return self
        return Poly({m: x * c for m, x in self.terms.items()})

    def __pow__(self, e: int) -> "Poly":
        if e < 0:
            raise ValueError("negative power of a polynomial")
        result = Poly.const(1)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def monic(self) -> "Poly":
        if not self.terms:
            return self
        return self.scale(1 / self.leading_coefficient())

    # calculus and substitution -----------------------------------------
    def diff(self, v: JetVar) -> "Poly":
        out: dict = {}
        for m, c in self.terms.items():
            for k, (w, e) in enumerate(m):
                if w == v:
                    nm = m[:k] + ((w, e - 1),) + m[k + 1:] if e > 1 else m[:k] + m[k + 1:]
                    out[nm] = out.get(nm, 0) + c * e
                    break
        return Poly({m: c for m, c in out.items() if c})

    def coeffs_in(self, v: JetVar) -> dict:
        """Coefficients as a univariate polynomial in ``v``: ``{power: Poly}``."""
        out: dict = {}
        for m, c in self.terms.items():
            e = 0
            rest = m
            for k, (w, ew) in enumerate(m):
                if w == v:
                    e = ew
                    rest = m[:k] + m[k + 1:]
                    break
            out.setdefault(e, {})[rest] = c
        return {e: Poly(t) for e, t in out.items()}

    @staticmethod
    def from_coeffs(v: JetVar, coeffs: Mapping) -> "Poly":
        out: dict = {}
        for e, p in coeffs.items():
            for m, c in p.terms.items():
                nm = _mono_mul(m, ((v, e),)) if e else m
                out[nm] = c
        return Poly(out)

    def subs(self, repl: Mapping) -> "Poly":
        """Substitute polynomials for variables."""
        if not repl:
            return self
        powers: dict = {}

        def power(v, e):
            key = (v, e)
            p = powers.get(key)
            if p is None:
                p = repl[v] if e == 1 else power(v, e - 1) * repl[v]
                powers[key] = p
            return p

        acc: dict = {}
        result = Poly()
        for m, c in self.terms.items():
            kept = []
            factor = None
            for v, e in m:
                if v in repl:
                    pv = power(v, e)
                    factor = pv if factor is None else factor * pv
                else:
                    kept.append((v, e))
            if factor is None:
                km = tuple(kept)
                acc[km] = acc.get(km, 0) + c
            else:
                result = result + factor * Poly.monomial(tuple(kept), c)
        return result + Poly({m: c for m, c in acc.items() if c})

    def evaluate(self, point: Mapping, one=1):
        """Evaluate with values from ``point`` (Fractions, floats or arrays)."""
        total = 0 * one
        for m, c in self.terms.items():
            t = c if not isinstance(one, float) else float(c)
            for v, e in m:
                t = t * point[v] ** e
            total = total + t
        return total

    def to_source(self, name: Callable[[JetVar], str]) -> str:
        """Python source for evaluating this polynomial; for code generation."""
        if not self.terms:
            return "0.0"
        parts = []
        for m, c in self.terms.items():
            factors = [repr(float(c))]
            for v, e in m:
                factors.append(name(v) if e == 1 else f"{name(v)}**{e}")
            parts.append("*".join(factors))
        return "(" + " + ".join(parts) + ")"


ZERO = Poly()
ONE = Poly.const(1)


# ---------------------------------------------------------------------------
# division and gcd


def _main_var(*polys: Poly) -> JetVar | None:
    best = None
    for p in polys:
        for m in p.terms:
            if m:
                v = m[-1][0]
                if best is None or v > best:
                    best = v
    return best


def exact_div(a: Poly, b: Poly) -> Poly:
    """``a / b`` when ``b`` divides ``a``; raises :class:`NotDivisible` otherwise."""
    if b.is_zero():
        raise ZeroDivisionError("polynomial division by zero")
    if a.is_zero():
        return ZERO
    if b.is_constant():
        return a.scale(1 / b.constant_value())
    v = _main_var(b)
    A = a.coeffs_in(v)
    B = b.coeffs_in(v)
    db = max(B)
    lcb = B[db]
    Q: dict = {}
    while A:
        da = max(A)
        if da < db:
            raise NotDivisible
        q = exact_div(A[da], lcb)
        k = da - db
        Q[k] = q
        for j, bj in B.items():
            idx = j + k
            r = A.get(idx, ZERO) - q * bj
            if r.is_zero():
                A.pop(idx, None)
            else:
                A[idx] = r
    return Poly.from_coeffs(v, Q)


def divides(b: Poly, a: Poly) -> bool:
    try:
        exact_div(a, b)
    except NotDivisible:
        return False
    return True


def _gcd_list(polys: Iterable[Poly]) -> Poly:
    g = ZERO
    for p in polys:
        g = gcd(g, p)
        if g.is_constant() and not g.is_zero():
            return ONE
    return g


def content(p: Poly, v: JetVar) -> Poly:
    return _gcd_list(sorted(p.coeffs_in(v).values(), key=len))


def _prem(A: dict, B: dict) -> dict:
    """Pseudo-remainder of univariate polynomials with polynomial coefficients."""
    db = max(B)
    lcb = B[db]
    R = dict(A)
    while R and max(R) >= db:
        dr = max(R)
        lcr = R.pop(dr)
        k = dr - db
        R = {e: c * lcb for e, c in R.items()}
        for j, bj in B.items():
            if j == db:
                continue
            idx = j + k
            r = R.get(idx, ZERO) - lcr * bj
            if r.is_zero():
                R.pop(idx, None)
            else:
                R[idx] = r
    return R


def _uni_primitive(A: dict) -> dict:
    c = _gcd_list(sorted(A.values(), key=len))
    if c.is_constant():
        lc = A[max(A)].leading_coefficient()
        return {e: p.scale(1 / lc) for e, p in A.items()}
    out = {e: exact_div(p, c) for e, p in A.items()}
    lc = out[max(out)].leading_coefficient()
    return {e: p.scale(1 / lc) for e, p in out.items()}


def gcd(a: Poly, b: Poly) -> Poly:
    """Greatest common divisor with leading coefficient 1 (0 if both are 0)."""
    if a.is_zero():
        return b.monic()
    if b.is_zero():
        return a.monic()
    if a.is_constant() or b.is_constant():
        return ONE
    if a == b:
        return a.monic()
    va, vb = a.variables(), b.variables()
    if va.isdisjoint(vb):
        # a common factor would involve variables of both
        return ONE
    v = max(va | vb)
    if v not in va:
        return gcd(a, content(b, v))
    if v not in vb:
        return gcd(content(a, v), b)
    A = a.coeffs_in(v)
    B = b.coeffs_in(v)
    ca = _gcd_list(sorted(A.values(), key=len))
    cb = _gcd_list(sorted(B.values(), key=len))
    c = gcd(ca, cb)
    if not ca.is_constant():
        A = {e: exact_div(p, ca) for e, p in A.items()}
    if not cb.is_constant():
        B = {e: exact_div(p, cb) for e, p in B.items()}
    if max(A) < max(B):
        A, B = B, A
    while True:
        R = _prem(A, B)
        if not R:
            g = B
            break
        if max(R) == 0:
            g = None
            break
        A, B = B, _uni_primitive(R)
    if g is None or max(g) == 0:
        return c.monic()
    g = _uni_primitive(g)
    return (c * Poly.from_coeffs(v, g)).monic()
