"""Immutable expression trees.

Trees keep the shape they were written in (the DSL round-trips them
structurally); each node lazily computes and caches its canonical
:class:`RationalFunction`, which is what all algebra works on.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable

from .jetvar import JetVar
from .poly import Poly, lex_key
from .rational import DivisionByZeroExpression, RationalFunction


class Expr:
    __slots__ = ("_rf", "_hash")
    precedence = 100

    def __init__(self):
        self._rf = None
        self._hash = None

    # canonical form ---------------------------------------------------
    def rational(self) -> RationalFunction:
        if self._rf is None:
            self._rf = self._build_rational()
        return self._rf

    def _build_rational(self) -> RationalFunction:
        raise NotImplementedError

    @staticmethod
    def from_rational(rf: RationalFunction) -> "Expr":
        """A tree for ``rf`` in expanded form, with the canonical form cached."""
        if rf.is_polynomial():
            e = _poly_tree(rf.num)
        else:
            e = Div(_poly_tree(rf.num), _poly_tree(rf.den))
        e._rf = rf
        return e

    def variables(self) -> set:
        return self.rational().variables()

    def syntax_variables(self) -> set:
        """Variables written in the tree, including ones that cancel."""
        out = set()
        stack = [self]
        while stack:
            e = stack.pop()
            if isinstance(e, Var):
                out.add(e.var)
            else:
                stack.extend(e.children())
        return out

    def children(self) -> tuple:
        return ()

    # structure --------------------------------------------------------
    def _key(self):
        raise NotImplementedError

    def __eq__(self, other) -> bool:
        if not isinstance(other, Expr):
            return NotImplemented
        return type(self) is type(other) and self._key() == other._key()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((type(self).__name__, self._key()))
        return self._hash

    def __str__(self) -> str:
        return to_source(self)

    def __repr__(self) -> str:
        return f"Expr({to_source(self)!r})"

    # operators (convenience; they flatten chains the way the parser does)
    def __add__(self, other):
        other = as_expr(other)
        left = self.args if isinstance(self, Add) else (self,)
        return Add(*left, other)

    def __radd__(self, other):
        return as_expr(other) + self

    def __sub__(self, other):
        other = as_expr(other)
        left = self.args if isinstance(self, Add) else (self,)
        return Add(*left, neg(other))

    def __rsub__(self, other):
        return as_expr(other) - self

    def __mul__(self, other):
        other = as_expr(other)
        left = self.args if isinstance(self, Mul) else (self,)
        return Mul(*left, other)

    def __rmul__(self, other):
        return as_expr(other) * self

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, e: int):
        if not isinstance(e, int):
            raise TypeError("only integer powers are supported")
        return Pow(self, e)


class Const(Expr):
    __slots__ = ("value",)
    precedence = 100

    def __init__(self, value):
        super().__init__()
        self.value = Fraction(value)

    def _key(self):
        return self.value

    def _build_rational(self):
        return RationalFunction.const(self.value)


class Var(Expr):
    __slots__ = ("var",)

    def __init__(self, var: JetVar | str, order: int = 0):
        super().__init__()
        self.var = JetVar(var, order) if isinstance(var, str) else var

    def _key(self):
        return self.var

    def _build_rational(self):
        return RationalFunction.var(self.var)


class Add(Expr):
    __slots__ = ("args",)
    precedence = 10

    def __init__(self, *args: Expr):
        super().__init__()
        if len(args) < 2:
            raise ValueError("Add needs at least two terms")
        self.args = tuple(args)

    def children(self):
        return self.args

    def _key(self):
        return self.args

    def _build_rational(self):
        rfs = [a.rational() for a in self.args]
        acc = rfs[0]
        for r in rfs[1:]:
            acc = acc + r
        return acc


class Neg(Expr):
    __slots__ = ("arg",)
    precedence = 15

    def __init__(self, arg: Expr):
        super().__init__()
        self.arg = arg

    def children(self):
        return (self.arg,)

    def _key(self):
        return (self.arg,)

    def _build_rational(self):
        return -self.arg.rational()


class Mul(Expr):
    __slots__ = ("args",)
    precedence = 20

    def __init__(self, *args: Expr):
        super().__init__()
        if len(args) < 2:
            raise ValueError("Mul needs at least two factors")
        self.args = tuple(args)

    def children(self):
        return self.args

    def _key(self):
        return self.args

    def _build_rational(self):
        acc = self.args[0].rational()
        for a in self.args[1:]:
            acc = acc * a.rational()
        return acc


class Div(Expr):
    __slots__ = ("num", "den")
    precedence = 20

    def __init__(self, num: Expr, den: Expr):
        super().__init__()
        self.num = num
        self.den = den

    def children(self):
        return (self.num, self.den)

    def _key(self):
        return (self.num, self.den)

    def _build_rational(self):
        d = self.den.rational()
        if d.is_zero():
            raise DivisionByZeroExpression(f"denominator {to_source(self.den)} is identically zero")
        return self.num.rational() / d


class Pow(Expr):
    __slots__ = ("base", "exp")
    precedence = 30

    def __init__(self, base: Expr, exp: int):
        super().__init__()
        if not isinstance(exp, int):
            raise TypeError("exponent must be an integer")
        self.base = base
        self.exp = exp

    def children(self):
        return (self.base,)

    def _key(self):
        return (self.base, self.exp)

    def _build_rational(self):
        b = self.base.rational()
        if self.exp < 0 and b.is_zero():
            raise DivisionByZeroExpression("negative power of zero")
        return b ** self.exp


# smart constructors shared by the parser and the operators ------------


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, JetVar):
        return Var(x)
    if isinstance(x, (int, Fraction)):
        return Const(x)
    if isinstance(x, str):
        return Var(x)
    raise TypeError(f"cannot convert {x!r} to an expression")


def neg(e: Expr) -> Expr:
    if isinstance(e, Const):
        return Const(-e.value)
    return Neg(e)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0:
        return Const(a.value / b.value)
    return Div(a, b)


def add(terms: Iterable[Expr]) -> Expr:
    terms = list(terms)
    if not terms:
        return Const(0)
    if len(terms) == 1:
        return terms[0]
    return Add(*terms)


def mul(factors: Iterable[Expr]) -> Expr:
    factors = list(factors)
    if not factors:
        return Const(1)
    if len(factors) == 1:
        return factors[0]
    return Mul(*factors)


def _mono_tree(m) -> list:
    return [Var(v) if e == 1 else Pow(Var(v), e) for v, e in m]


def _poly_tree(p: Poly) -> Expr:
    if p.is_zero():
        return Const(0)
    terms = []
    for m, c in sorted(p.terms.items(), key=lambda t: lex_key(t[0]), reverse=True):
        factors = _mono_tree(m)
        mag = abs(c)
        if not factors:
            t = Const(mag)
        elif mag == 1:
            t = mul(factors)
        else:
            t = mul([Const(mag)] + factors)
        terms.append((c, factors, t))
    # open with a positive term when there is one: "D(x2) - x1 * D(x3)"
    first = next((k for k, term in enumerate(terms) if term[0] > 0), 0)
    terms.insert(0, terms.pop(first))
    out = []
    for k, (c, factors, t) in enumerate(terms):
        if c < 0:
            # leading negative term reads better as "-2 * x" than "-(2 * x)"
            t = mul([Const(c)] + factors) if k == 0 and factors else neg(t)
        out.append(t)
    return add(out)


# printing ------------------------------------------------------------------


def _const_source(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"({c.numerator}/{c.denominator})"


def _atomic(e: Expr) -> bool:
    return isinstance(e, Var) or (isinstance(e, Const) and e.value.denominator == 1 and e.value >= 0)


def to_source(e: Expr) -> str:
    """Concrete syntax for ``e`` that parses back to the same tree."""
    if isinstance(e, Const):
        return _const_source(e.value)
    if isinstance(e, Var):
        return str(e.var)
    if isinstance(e, Add):
        parts = [_add_first(e.args[0])]
        for a in e.args[1:]:
            if isinstance(a, Neg):
                parts.append(" - " + _wrap_sum_term(a.arg))
            elif isinstance(a, Const) and a.value < 0:
                parts.append(" - " + _const_source(-a.value))
            else:
                parts.append(" + " + _wrap_sum_term(a))
        return "".join(parts)
    if isinstance(e, Neg):
        return "-" + (to_source(e.arg) if _atomic(e.arg) or isinstance(e.arg, Pow) else f"({to_source(e.arg)})")
    if isinstance(e, Mul):
        parts = []
        for k, a in enumerate(e.args):
            if isinstance(a, (Add, Neg, Mul)) or (isinstance(a, Div) and k > 0):
                parts.append(f"({to_source(a)})")
            else:
                parts.append(to_source(a))
        return " * ".join(parts)
    if isinstance(e, Div):
        num = to_source(e.num)
        if isinstance(e.num, (Add, Neg)):
            num = f"({num})"
        den = to_source(e.den)
        if not (_atomic(e.den) or isinstance(e.den, Pow)):
            den = f"({den})"
        return f"{num} / {den}"
    if isinstance(e, Pow):
        base = to_source(e.base) if _atomic(e.base) else f"({to_source(e.base)})"
        return f"{base}^{e.exp}"
    raise TypeError(type(e))


def _add_first(a: Expr) -> str:
    if isinstance(a, Add):
        return f"({to_source(a)})"
    return to_source(a)


def _wrap_sum_term(a: Expr) -> str:
    if isinstance(a, (Add, Neg)) or (isinstance(a, Const) and a.value < 0):
        return f"({to_source(a)})"
    return to_source(a)
