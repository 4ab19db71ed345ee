"""Prolongation of systems and maps; reduction to solution coordinates."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .expr import Expr, JetVar, total_derivative_rf
from .expr.rational import ZERO_RF, RationalFunction
from .system import ExplicitSystem

#: Highest prolongation order computed before refusing (expression swell).
MAX_ORDER = 8


def _check_order(i: int, max_order: int | None) -> None:
    cap = MAX_ORDER if max_order is None else max_order
    if i < 0:
        raise ValueError("prolongation order must be non-negative")
    if i > cap:
        raise ValueError(f"prolongation order {i} exceeds the cap {cap}")


@lru_cache(maxsize=None)
def _prolong_f_rf(S: ExplicitSystem, i: int) -> tuple:
    if i == 0:
        return tuple(e.rational() for e in S.f)
    prev = _prolong_f_rf(S, i - 1)
    f = [e.rational() for e in S.f]
    out = []
    for g in prev:
        acc = ZERO_RF
        for s, fs in zip(S.x_I, f):
            acc = acc + g.diff(JetVar(s, 0)) * fs
        # f^(i-1) involves x_II derivatives of order 0..i
        for s in S.x_II:
            for j in range(i + 1):
                acc = acc + g.diff(JetVar(s, j)) * RationalFunction.var(JetVar(s, j + 1))
        out.append(acc)
    return tuple(out)


def prolong_f(S: ExplicitSystem, i: int, *, max_order: int | None = None) -> list:
    """``f^(i)``: the right-hand sides of ``x_I^(i+1)`` on solutions of ``S``.

    ``f^(0) = f`` and each step applies
    ``d/dx_I(.) f + sum_j d/dx_II^(j)(.) x_II^(j+1)``, with ``j`` running
    over every ``x_II`` derivative order the previous term depends on.
    """
    _check_order(i, max_order)
    return [Expr.from_rational(r) for r in _prolong_f_rf(S, i)]


@dataclass(frozen=True)
class ProlongedSystem:
    """Equations ``x_I^(i) = f^(i-1)``, ``1 <= i <= order``, plus the domain."""

    system: ExplicitSystem
    order: int
    equations: tuple  # ((JetVar, Expr), ...)

    @property
    def domain(self) -> tuple:
        return self.system.domain

    def __str__(self) -> str:
        return "\n".join(f"{v} = {e}" for v, e in self.equations)


def prolong_system(S: ExplicitSystem, K: int, *, max_order: int | None = None) -> ProlongedSystem:
    if K < 1:
        raise ValueError("prolongation order must be at least 1")
    _check_order(K - 1, max_order)
    eqs = []
    for i in range(1, K + 1):
        for s, e in zip(S.x_I, prolong_f(S, i - 1, max_order=max_order)):
            eqs.append((JetVar(s, i), e))
    return ProlongedSystem(S, K, tuple(eqs))


def _reduction_bindings(S: ExplicitSystem, top: int) -> dict:
    out = {}
    for i in range(1, top + 1):
        for s, rf in zip(S.x_I, _prolong_f_rf(S, i - 1)):
            out[JetVar(s, i)] = rf
    return out


def reduce_rf(rf: RationalFunction, S: ExplicitSystem) -> RationalFunction:
    xI = set(S.x_I)
    top = max((v.order for v in rf.variables() if v.name in xI), default=0)
    if top == 0:
        return rf
    _check_order(top - 1, None)
    return rf.subs(_reduction_bindings(S, top))


def reduce(e: Expr, S: ExplicitSystem) -> Expr:
    """Replace every ``x_I^(i)``, ``i >= 1``, by ``f^(i-1)``."""
    rf = e.rational()
    out = reduce_rf(rf, S)
    return e if out is rf else Expr.from_rational(out)


def sys_total_derivative_rf(rf: RationalFunction, S: ExplicitSystem) -> RationalFunction:
    rf = reduce_rf(rf, S)
    rhs = {JetVar(s, 0): fs for s, fs in zip(S.x_I, (e.rational() for e in S.f))}
    return total_derivative_rf(rf, rhs)


def sys_total_derivative(e: Expr, S: ExplicitSystem) -> Expr:
    """Time derivative of ``e`` along solutions of ``S``, in reduced coordinates.

    ``e`` is reduced first if it mentions derivatives of ``x_I``.
    """
    return Expr.from_rational(sys_total_derivative_rf(e.rational(), S))


class MapJets:
    """Lazily computed prolongation components of a jet map.

    ``self[JetVar(z, l)]`` is the ``l``-fold total derivative, along the
    source system, of the component assigned to target state ``z``.
    """

    def __init__(self, phi, max_order: int | None = None):
        self.source = phi.source
        self.max_order = max_order
        self._cache = {
            JetVar(z, 0): c.rational() for z, c in zip(phi.target.states, phi.components)
        }

    def __getitem__(self, v: JetVar) -> RationalFunction:
        rf = self._cache.get(v)
        if rf is None:
            if v.order == 0:
                raise KeyError(v)
            _check_order(v.order, self.max_order)
            rf = sys_total_derivative_rf(self[v.lower()], self.source)
            self._cache[v] = rf
        return rf

    def bindings(self, variables) -> dict:
        return {v: self[v] for v in variables}


def prolong_map(phi, r: int, *, max_order: int | None = None) -> list:
    """Components of the ``r``-th prolongation restricted to solutions.

    Entry ``l`` (``0 <= l <= r``) is the tuple of ``l``-th time derivatives
    of the map components along the source system.
    """
    _check_order(r, max_order)
    jets = MapJets(phi, max_order)
    return [
        tuple(Expr.from_rational(jets[JetVar(z, l)]) for z in phi.target.states)
        for l in range(r + 1)
    ]


def reduced_coordinates(S: ExplicitSystem, order: int) -> list:
    """``x_I, x_II, D(x_II), ..., x_II^(order)``."""
    out = [JetVar(s, 0) for s in S.states]
    for k in range(1, order + 1):
        out += [JetVar(s, k) for s in S.x_II]
    return out


def is_reduced(e: Expr, S: ExplicitSystem) -> bool:
    xI = set(S.x_I)
    return all(not (v.name in xI and v.order >= 1) for v in e.variables())
