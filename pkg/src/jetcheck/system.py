"""Regular systems in explicit form ``D(x_I) = f(x_I, x_II, D(x_II))``."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .expr import Expr, JetVar, Var, differentiate, evaluate, substitute
from .expr.rational import RationalFunction


class InvalidSystem(ValueError):
    """Malformed system data."""


class DenominatorVanishes(ZeroDivisionError):
    pass


class RegionExhausted(RuntimeError):
    """No admissible point was found in the sampling box."""


class NotInTriangularForm(ValueError):
    """The control system does not read ``D(x_II) = u`` for its last block."""


@dataclass(frozen=True)
class Constraint:
    """``expr != 0`` or ``expr > 0``."""

    expr: Expr
    kind: str = "!="

    def __post_init__(self):
        if self.kind not in ("!=", ">"):
            raise ValueError(f"unknown constraint kind {self.kind!r}")

    def holds_at(self, value) -> bool:
        if self.kind == "!=":
            return value != 0
        return value > 0

    def __str__(self) -> str:
        return f"{self.expr} {self.kind} 0"


@dataclass(frozen=True)
class ExplicitSystem:
    """A system ``D(x_I) = f`` on ``n`` states with ``m`` controls.

    ``controls`` names the ``x_II`` block; the remaining states, in declared
    order, form ``x_I`` and ``f`` lists one right-hand side per ``x_I``
    state. ``domain`` holds constraints on variables of order at most 1.
    """

    name: str
    states: tuple
    controls: tuple
    f: tuple = ()
    domain: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "controls", tuple(self.controls))
        object.__setattr__(self, "f", tuple(self.f))
        object.__setattr__(self, "domain", tuple(self.domain))
        if len(set(self.states)) != len(self.states):
            raise InvalidSystem(f"{self.name}: duplicate state names")
        extra = set(self.controls) - set(self.states)
        if extra:
            raise InvalidSystem(f"{self.name}: controls {sorted(extra)} are not states")
        if len(self.f) != len(self.x_I):
            raise InvalidSystem(
                f"{self.name}: expected {len(self.x_I)} equations, got {len(self.f)}"
            )
        allowed = set(self.base_vars) | {JetVar(u, 1) for u in self.controls}
        for name, rhs in zip(self.x_I, self.f):
            bad = rhs.syntax_variables() - allowed
            if bad:
                raise InvalidSystem(
                    f"{self.name}: right-hand side of D({name}) uses {sorted(map(str, bad))}"
                )
        first = allowed | {JetVar(s, 1) for s in self.x_I}
        for c in self.domain:
            bad = c.expr.syntax_variables() - first
            if bad:
                raise InvalidSystem(f"{self.name}: domain uses {sorted(map(str, bad))}")

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def m(self) -> int:
        return len(self.controls)

    @property
    def x_I(self) -> tuple:
        ctrl = set(self.controls)
        return tuple(s for s in self.states if s not in ctrl)

    @property
    def x_II(self) -> tuple:
        return self.controls

    @property
    def base_vars(self) -> tuple:
        return tuple(JetVar(s, 0) for s in self.states)

    def is_trivial(self) -> bool:
        return self.n == self.m

    def rhs(self) -> dict:
        """``{D(x_I,i): f_i}`` as canonical rational functions."""
        return {JetVar(s, 1): e.rational() for s, e in zip(self.x_I, self.f)}

    def residual_exprs(self) -> list:
        return [Var(s, 1) - e for s, e in zip(self.x_I, self.f)]

    def f_denominators(self) -> list:
        return [e.rational().den for e in self.f if not e.rational().is_polynomial()]


@dataclass(frozen=True)
class JetPoint:
    """Values of jet coordinates up to a stated order."""

    values: Mapping = field(default_factory=dict)
    order: int = 1

    def __getitem__(self, v: JetVar):
        return self.values[v]

    def __contains__(self, v) -> bool:
        return v in self.values

    def get(self, v, default=None):
        return self.values.get(v, default)

    def truncate(self, order: int) -> "JetPoint":
        return JetPoint({v: x for v, x in self.values.items() if v.order <= order}, order)

    def as_dict(self) -> dict:
        return dict(self.values)

    def to_json(self) -> dict:
        return {str(v): str(x) for v, x in sorted(self.values.items())}


@dataclass(frozen=True)
class ControlForm:
    """``D(x) = F(x, u)`` with state names ``states`` and inputs ``inputs``."""

    states: tuple
    inputs: tuple
    F: tuple

    def __post_init__(self):
        if len(self.F) != len(self.states):
            raise ValueError("need one right-hand side per state")
        if set(self.inputs) & set(self.states):
            raise ValueError("input names must differ from state names")


def residuals(S: ExplicitSystem, p: JetPoint | Mapping) -> list:
    """``D(x_I) - f`` evaluated at ``p``."""
    point = p.values if isinstance(p, JetPoint) else p
    out = []
    for e in S.residual_exprs():
        try:
            out.append(evaluate(e, point))
        except ZeroDivisionError as exc:
            raise DenominatorVanishes(str(exc)) from None
    return out


def satisfies_domain(constraints: Iterable[Constraint], point: Mapping) -> bool:
    for c in constraints:
        try:
            value = evaluate(c.expr, point)
        except ZeroDivisionError:
            return False
        if not c.holds_at(value):
            return False
    return True


def on_system(S: ExplicitSystem, p: JetPoint | Mapping) -> bool:
    point = p.values if isinstance(p, JetPoint) else p
    try:
        if any(r != 0 for r in residuals(S, point)):
            return False
    except DenominatorVanishes:
        return False
    return satisfies_domain(S.domain, point)


def check_rank(C: ControlForm, p: JetPoint | Mapping, rtol: float = 1e-9) -> bool:
    """Whether ``dF/du`` has full column rank at ``p``."""
    point = p.values if isinstance(p, JetPoint) else p
    point = {v: float(x) for v, x in point.items()}
    m = len(C.inputs)
    if m == 0:
        return True
    J = np.empty((len(C.F), m))
    for i, Fi in enumerate(C.F):
        for j, u in enumerate(C.inputs):
            J[i, j] = float(evaluate(differentiate(Fi, JetVar(u, 0)), point))
    s = np.linalg.svd(J, compute_uv=False)
    if s.size < m or not np.all(np.isfinite(s)) or s[0] == 0:
        return False
    return bool(s[m - 1] > rtol * s[0])


def from_control_form(C: ControlForm, name: str = "S") -> ExplicitSystem:
    """Eliminate ``u`` from a system whose ``x_II`` block reads ``D(x_II) = u``."""
    m = len(C.inputs)
    tail = C.F[len(C.states) - m:] if m else ()
    tail_states = C.states[len(C.states) - m:] if m else ()
    matched = {}
    for s, rhs in zip(tail_states, tail):
        rf = rhs.rational()
        hit = [u for u in C.inputs if rf == RationalFunction.var(JetVar(u, 0))]
        if not hit:
            raise NotInTriangularForm(f"D({s}) = {rhs} is not an input")
        matched[hit[0]] = s
    if len(matched) != m:
        raise NotInTriangularForm("inputs must each drive exactly one state")
    head_states = C.states[: len(C.states) - m]
    bindings = {JetVar(u, 0): Var(s, 1) for u, s in matched.items()}
    f = []
    for s, rhs in zip(head_states, C.F[: len(C.states) - m]):
        if not rhs.variables() & set(bindings):
            f.append(rhs)
        else:
            f.append(substitute(rhs, bindings))
    return ExplicitSystem(name, C.states, tuple(tail_states), tuple(f))


def to_control_form(S: ExplicitSystem, inputs: Sequence[str] | None = None) -> ControlForm:
    """Reinsert ``u = D(x_II)``: inverse of :func:`from_control_form`."""
    inputs = tuple(inputs or (f"u_{s}" for s in S.x_II))
    bind = {JetVar(s, 1): Var(u) for s, u in zip(S.x_II, inputs)}
    F = [substitute(e, bind) if bind else e for e in S.f]
    F += [Var(u) for u in inputs]
    return ControlForm(S.x_I + S.x_II, inputs, tuple(F))


# sampling ----------------------------------------------------------------


def _draw(rng: random.Random, lo: Fraction, hi: Fraction, denom: int) -> Fraction:
    a = int(np.ceil(lo * denom))
    b = int(np.floor(hi * denom))
    return Fraction(rng.randint(a, b), denom)


def sample_fiber_point(
    S: ExplicitSystem,
    seed=0,
    region: tuple = (-2, 2),
    *,
    order: int = 1,
    constraints: Sequence[Constraint] = (),
    denom: int = 2**16,
    max_tries: int = 1000,
) -> JetPoint:
    """A rational jet of a solution of ``S`` inside ``region``.

    Draws ``x`` and ``x_II`` derivatives up to ``order`` from the box, sets
    the ``x_I`` derivatives from the system (so residuals are exactly 0),
    and rejects draws violating the domain, ``constraints`` or a vanishing
    denominator. Deterministic for a given ``seed``.
    """
    lo, hi = Fraction(region[0]), Fraction(region[1])
    if lo > hi or int(np.floor(hi * denom)) < int(np.ceil(lo * denom)):
        raise RegionExhausted(f"empty sampling box {region}")
    rng = random.Random(f"{S.name}:{seed}")
    rhs = _lift_rhs(S, order)
    for _ in range(max_tries):
        point = {v: _draw(rng, lo, hi, denom) for v in S.base_vars}
        for s in S.x_II:
            for k in range(1, order + 1):
                point[JetVar(s, k)] = _draw(rng, lo, hi, denom)
        try:
            for v, rf in rhs:
                point[v] = rf.evaluate(point)
        except ZeroDivisionError:
            continue
        if not satisfies_domain(S.domain, point) or not satisfies_domain(constraints, point):
            continue
        return JetPoint(point, order)
    raise RegionExhausted(f"no admissible point after {max_tries} draws in {region}")


def _lift_rhs(S: ExplicitSystem, order: int) -> list:
    if order <= 1:
        return list(S.rhs().items())
    from .prolong import prolong_f

    out = []
    for i in range(1, order + 1):
        fi = prolong_f(S, i - 1)
        out += [(JetVar(s, i), e.rational()) for s, e in zip(S.x_I, fi)]
    return out


def trivial_system(name: str, states: Sequence[str]) -> ExplicitSystem:
    return ExplicitSystem(name, tuple(states), tuple(states))
