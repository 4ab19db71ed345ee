"""Exact symbolic kernel: rational functions over Q in jet variables."""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping

import numpy as np

from .jetvar import JetVar, jets
from .poly import Poly, gcd
from .rational import DivisionByZeroExpression, RationalFunction
from .tree import (
    Add,
    Const,
    Div,
    Expr,
    Mul,
    Neg,
    Pow,
    Var,
    as_expr,
    div,
    neg,
    to_source,
)

__all__ = [
    "Add", "Const", "CyclicBindings", "Div", "DivisionByZeroExpression", "Expr",
    "JetVar", "Mul", "Neg", "Poly", "Pow", "RationalFunction", "Var", "as_expr",
    "differentiate", "div", "evaluate", "free_total_derivative", "gcd", "is_zero",
    "jets", "lambdify", "neg", "normalize", "substitute", "to_source",
]


class CyclicBindings(ValueError):
    """A bound variable appears in its own replacement."""


def differentiate(e: Expr, v: JetVar) -> Expr:
    return Expr.from_rational(e.rational().diff(v))


def normalize(e: Expr) -> Expr:
    """Canonical form of ``e``: expanded ``num/den`` with ``gcd = 1``, ``den`` monic."""
    return Expr.from_rational(e.rational())


def is_zero(e: Expr) -> bool:
    return e.rational().is_zero()


def _check_acyclic(bindings: Mapping[JetVar, Expr]) -> None:
    deps = {v: e.variables() & bindings.keys() for v, e in bindings.items()}
    state: dict = {}

    def visit(v):
        state[v] = 1
        for w in deps[v]:
            s = state.get(w)
            if s == 1:
                raise CyclicBindings(f"binding for {w} depends on itself")
            if s is None:
                visit(w)
        state[v] = 2

    for v in deps:
        if v not in state:
            visit(v)


def substitute(e: Expr, bindings: Mapping[JetVar, Expr]) -> Expr:
    """Simultaneous substitution; variables without a binding are left alone."""
    bindings = {v: as_expr(b) for v, b in bindings.items()}
    _check_acyclic(bindings)
    if not bindings:
        return e
    return Expr.from_rational(subs_rf(e.rational(), bindings))


def subs_rf(rf: RationalFunction, bindings: Mapping[JetVar, Expr]) -> RationalFunction:
    return rf.subs({v: b.rational() for v, b in bindings.items()})


def total_derivative_rf(rf: RationalFunction, rhs: Mapping[JetVar, RationalFunction] | None = None) -> RationalFunction:
    """``sum_v d(rf)/dv * v'`` with ``v'`` taken from ``rhs`` when present.

    Without ``rhs`` every variable is free and ``v'`` is ``v`` one order up.
    """
    rhs = rhs or {}

    def dpoly(p: Poly) -> RationalFunction:
        acc_poly = Poly()
        acc_rat = None
        for v in p.variables():
            dp = p.diff(v)
            r = rhs.get(v)
            if r is None:
                acc_poly = acc_poly + dp * Poly.var(v.prime())
            elif r.is_polynomial():
                acc_poly = acc_poly + dp * r.num
            else:
                term = RationalFunction.poly(dp) * r
                acc_rat = term if acc_rat is None else acc_rat + term
        out = RationalFunction.poly(acc_poly)
        return out if acc_rat is None else out + acc_rat

    dn = dpoly(rf.num)
    if rf.is_polynomial():
        return dn
    dd = dpoly(rf.den)
    den = RationalFunction.poly(rf.den)
    return (dn * den - RationalFunction.poly(rf.num) * dd) / (den * den)


def free_total_derivative(e: Expr) -> Expr:
    """Total time derivative treating every jet coordinate as free."""
    return Expr.from_rational(total_derivative_rf(e.rational()))


def evaluate(e: Expr, point: Mapping[JetVar, object]):
    """Value of ``e`` at ``point``; exact when the values are Fractions or ints."""
    vals = {v: (Fraction(x) if isinstance(x, int) else x) for v, x in point.items()}
    rf = e.rational()
    if any(isinstance(x, float) for x in vals.values()):
        d = rf.den.evaluate(vals, 1.0)
        if d == 0:
            raise ZeroDivisionError("denominator vanishes at the point")
        return rf.num.evaluate(vals, 1.0) / d
    return rf.evaluate(vals)


def lambdify(exprs, variables):
    """Compile expressions into a vectorised float function of ``variables``.

    The returned callable takes one positional argument per variable (floats
    or numpy arrays) and returns a tuple of values, one per expression.
    """
    variables = list(variables)
    names = {v: f"_a{k}" for k, v in enumerate(variables)}
    lines = [f"def _f({', '.join(names[v] for v in variables)}):"]
    outs = []
    for k, e in enumerate(exprs):
        rf = e.rational() if isinstance(e, Expr) else e
        missing = rf.variables() - set(variables)
        if missing:
            raise ValueError(f"unbound variables {sorted(missing)}")
        num = rf.num.to_source(names.__getitem__)
        if rf.is_polynomial():
            lines.append(f"    _r{k} = {num} + _zero")
        else:
            lines.append(f"    _r{k} = {num} / {rf.den.to_source(names.__getitem__)} + _zero")
        outs.append(f"_r{k}")
    lines.append(f"    return ({', '.join(outs)}{',' if len(outs) == 1 else ''})")
    ns = {"_zero": 0.0}
    exec("\n".join(lines), ns)
    fn = ns["_f"]

    def call(*args):
        args = [np.asarray(a, dtype=float) if not isinstance(a, float) else a for a in args]
        with np.errstate(divide="ignore", invalid="ignore"):
            return fn(*args)

    return call
