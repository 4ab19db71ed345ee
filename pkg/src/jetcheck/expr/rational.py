"""Rational functions ``num/den`` kept in canonical form.

Canonical means ``gcd(num, den) == 1`` and the leading coefficient of
``den`` is 1, so two rational functions are equal exactly when their
numerators and denominators are equal as polynomials.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping

from .jetvar import JetVar
from .poly import ONE, ZERO, Poly, exact_div, gcd


class DivisionByZeroExpression(ZeroDivisionError):
    """The denominator of an expression is identically zero."""


class RationalFunction:
    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: Poly, den: Poly = ONE, *, reduced: bool = False):
        if den.is_zero():
            raise DivisionByZeroExpression("denominator is identically zero")
        if not reduced:
            num, den = _reduce(num, den)
        self.num = num
        self.den = den
        self._hash = None

    @staticmethod
    def const(c) -> "RationalFunction":
        return RationalFunction(Poly.const(c), ONE, reduced=True)

    @staticmethod
    def var(v: JetVar) -> "RationalFunction":
        return RationalFunction(Poly.var(v), ONE, reduced=True)

    @staticmethod
    def poly(p: Poly) -> "RationalFunction":
        return RationalFunction(p, ONE, reduced=True)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den == ONE

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def constant_value(self) -> Fraction:
        return self.num.constant_value() / self.den.constant_value()

    def variables(self) -> set:
        return self.num.variables() | self.den.variables()

    def __eq__(self, other) -> bool:
        if not isinstance(other, RationalFunction):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    def __repr__(self) -> str:
        if self.is_polynomial():
            return f"RationalFunction({self.num})"
        return f"RationalFunction(({self.num}) / ({self.den}))"

    # arithmetic -------------------------------------------------------
    def __neg__(self) -> "RationalFunction":
        return RationalFunction(-self.num, self.den, reduced=True)

    def __add__(self, other: "RationalFunction") -> "RationalFunction":
        if other.num.is_zero():
            return self
        if self.num.is_zero():
            return other
        if self.den == other.den:
            if self.den == ONE:
                return RationalFunction(self.num + other.num, ONE, reduced=True)
            return RationalFunction(self.num + other.num, self.den)
        if other.den == ONE:
            return RationalFunction(self.num + other.num * self.den, self.den, reduced=True)
        if self.den == ONE:
            return RationalFunction(self.num * other.den + other.num, other.den, reduced=True)
        g = gcd(self.den, other.den)
        if g == ONE:
            return RationalFunction(
                self.num * other.den + other.num * self.den, self.den * other.den
            )
        bd = exact_div(self.den, g)
        dd = exact_div(other.den, g)
        return RationalFunction(self.num * dd + other.num * bd, bd * other.den)

    def __sub__(self, other: "RationalFunction") -> "RationalFunction":
        return self + (-other)

    def __mul__(self, other: "RationalFunction") -> "RationalFunction":
        if self.num.is_zero() or other.num.is_zero():
            return ZERO_RF
        if self.den == ONE and other.den == ONE:
            return RationalFunction(self.num * other.num, ONE, reduced=True)
        g1 = gcd(self.num, other.den)
        g2 = gcd(other.num, self.den)
        a = exact_div(self.num, g1) if g1 != ONE else self.num
        d = exact_div(other.den, g1) if g1 != ONE else other.den
        c = exact_div(other.num, g2) if g2 != ONE else other.num
        b = exact_div(self.den, g2) if g2 != ONE else self.den
        num, den = a * c, b * d
        lc = den.leading_coefficient()
        return RationalFunction(num.scale(1 / lc), den.scale(1 / lc), reduced=True)

    def inverse(self) -> "RationalFunction":
        if self.num.is_zero():
            raise DivisionByZeroExpression("inverse of zero")
        lc = self.num.leading_coefficient()
        return RationalFunction(self.den.scale(1 / lc), self.num.scale(1 / lc), reduced=True)

    def __truediv__(self, other: "RationalFunction") -> "RationalFunction":
        return self * other.inverse()

    def __pow__(self, e: int) -> "RationalFunction":
        if e < 0:
            return self.inverse() ** (-e)
        # powers of coprime polynomials stay coprime
        return RationalFunction(self.num ** e, self.den ** e, reduced=True)

    # calculus and substitution -----------------------------------------
    def diff(self, v: JetVar) -> "RationalFunction":
        dn = self.num.diff(v)
        if self.den == ONE:
            return RationalFunction(dn, ONE, reduced=True)
        dd = self.den.diff(v)
        if dd.is_zero():
            return RationalFunction(dn, self.den)
        return RationalFunction(dn * self.den - self.num * dd, self.den * self.den)

    def subs(self, repl: Mapping) -> "RationalFunction":
        """Simultaneous substitution of rational functions for variables."""
        repl = {v: r for v, r in repl.items() if v in self.variables()}
        if not repl:
            return self
        num = _subs_poly(self.num, repl)
        if self.den == ONE:
            return num
        return num / _subs_poly(self.den, repl)

    def evaluate(self, point: Mapping):
        """Exact value at a point of Fractions; raises on a vanishing denominator."""
        d = self.den.evaluate(point)
        if d == 0:
            raise ZeroDivisionError("denominator vanishes at the point")
        return self.num.evaluate(point) / d


ZERO_RF = RationalFunction(ZERO, ONE, reduced=True)
ONE_RF = RationalFunction(ONE, ONE, reduced=True)


def _reduce(num: Poly, den: Poly) -> tuple[Poly, Poly]:
    if num.is_zero():
        return ZERO, ONE
    if den.is_constant():
        c = den.constant_value()
        return num.scale(1 / c), ONE
    g = gcd(num, den)
    if g != ONE:
        num = exact_div(num, g)
        den = exact_div(den, g)
    lc = den.leading_coefficient()
    if lc != 1:
        num = num.scale(1 / lc)
        den = den.scale(1 / lc)
    return num, den


def _subs_poly(p: Poly, repl: Mapping) -> RationalFunction:
    """Substitute rational functions into a polynomial over a common denominator.

    With ``v -> n_v / d_v`` and ``E_v`` the degree of ``p`` in ``v``, the
    result is ``sum c * prod n_v^e d_v^(E_v - e)`` over ``prod d_v^E_v``.
    """
    used = [v for v in repl if v in p.variables()]
    if not used:
        return RationalFunction(p, ONE, reduced=True)
    poly_repl = {v: repl[v].num for v in used if repl[v].den == ONE}
    rat = [v for v in used if repl[v].den != ONE]
    if not rat:
        return RationalFunction(p.subs(poly_repl), ONE, reduced=True)
    degs = {v: p.degree(v) for v in rat}
    nums = {v: repl[v].num for v in rat}
    dens = {v: repl[v].den for v in rat}
    cache: dict = {}

    def pw(tag, v, e):
        key = (tag, v, e)
        r = cache.get(key)
        if r is None:
            base = nums[v] if tag == "n" else dens[v]
            r = ONE if e == 0 else (base if e == 1 else pw(tag, v, e - 1) * base)
            cache[key] = r
        return r

    total = ZERO
    # group terms by their exponents in the rational variables
    groups: dict = {}
    for m, c in p.terms.items():
        exps = {}
        rest = []
        for v, e in m:
            if v in degs:
                exps[v] = e
            else:
                rest.append((v, e))
        key = tuple(exps.get(v, 0) for v in rat)
        groups.setdefault(key, {})[tuple(rest)] = c
    for key, terms in groups.items():
        factor = ONE
        for v, e in zip(rat, key):
            factor = factor * pw("n", v, e) * pw("d", v, degs[v] - e)
        coeff = Poly(terms)
        if poly_repl:
            coeff = coeff.subs(poly_repl)
        total = total + coeff * factor
    den = ONE
    for v in rat:
        den = den * pw("d", v, degs[v])
    return RationalFunction(total, den)
