"""Dynamic-equivalence certificates and their exact verification.

A certificate is a pair of jet maps ``Phi: S -> S'`` (order ``K``) and
``Psi: S' -> S`` (order ``K'``) written in reduced coordinates. The checks
below turn "maps solutions to solutions" and "the compositions are the
identity on solutions" into identities between rational functions, which
the canonical form decides exactly. Domain conditions are only sampled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .expr import Expr, JetVar
from .expr.rational import RationalFunction
from .prolong import MapJets, sys_total_derivative_rf
from .system import Constraint, ExplicitSystem, JetPoint, RegionExhausted, sample_fiber_point


class InvalidMap(ValueError):
    pass


class ZeroDirection(ValueError):
    """The control direction lies in the kernel of the top-order partials."""


@dataclass(frozen=True)
class JetMap:
    """A map from reduced jets of ``source`` to the states of ``target``.

    ``components`` are aligned with ``target.states``; they may use the
    source states, and derivatives of the source ``x_II`` block up to
    ``order``. ``domain`` constrains the same coordinates.
    """

    name: str
    source: ExplicitSystem
    target: ExplicitSystem
    order: int
    components: tuple
    domain: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "domain", tuple(self.domain))
        if self.order < 0:
            raise InvalidMap(f"{self.name}: negative order")
        if len(self.components) != self.target.n:
            raise InvalidMap(
                f"{self.name}: {len(self.components)} components for "
                f"{self.target.n} target states"
            )
        allowed = self.allowed_variables()
        for what, exprs in (("component", self.components), ("domain", [c.expr for c in self.domain])):
            for e in exprs:
                bad = e.syntax_variables() - allowed
                if bad:
                    raise InvalidMap(
                        f"{self.name}: {what} {e} uses {sorted(map(str, bad))}, outside the "
                        f"reduced coordinates of order {self.order}"
                    )

    def allowed_variables(self) -> set:
        out = set(self.source.base_vars)
        for s in self.source.x_II:
            out.update(JetVar(s, k) for k in range(1, self.order + 1))
        return out


@dataclass(frozen=True)
class Certificate:
    name: str
    forward: JetMap
    backward: JetMap

    def __post_init__(self):
        if self.forward.source != self.backward.target or self.forward.target != self.backward.source:
            raise InvalidMap(f"{self.name}: forward and backward maps do not pair up")

    @property
    def source(self) -> ExplicitSystem:
        return self.forward.source

    @property
    def target(self) -> ExplicitSystem:
        return self.forward.target


@dataclass
class CheckOutcome:
    name: str
    passed: bool
    kind: str = "exact"  # or "statistical"
    residuals: list = field(default_factory=list)
    witnesses: list = field(default_factory=list)
    note: str = ""

    def to_json(self) -> dict:
        out = {"name": self.name, "passed": self.passed, "kind": self.kind}
        if self.residuals:
            out["residuals"] = list(self.residuals)
        if self.witnesses:
            out["witnesses"] = list(self.witnesses)
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class CheckReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckOutcome:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def merge(self, other: "CheckReport") -> "CheckReport":
        return CheckReport(self.checks + other.checks)

    def to_json(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_json() for c in self.checks]}

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(f"[{status}] {c.name} ({c.kind}){': ' + c.note if c.note else ''}")
            for r in c.residuals:
                lines.append(f"    residual: {r}")
        return "\n".join(lines)


# --------------------------------------------------------------------------


def _compose(outer_rfs, inner: MapJets) -> list:
    """Substitute the prolonged ``inner`` map into rational functions."""
    out = []
    for rf in outer_rfs:
        out.append(rf.subs(inner.bindings(rf.variables())))
    return out


def target_residuals(phi: JetMap) -> list:
    """``D(z_I) - g(z, D(z_II))`` along the image of ``phi``, as rational functions."""
    jets = MapJets(phi)
    out = []
    for e in phi.target.residual_exprs():
        rf = e.rational()
        out.append(rf.subs(jets.bindings(rf.variables())))
    return out


def check_maps_into(phi: JetMap) -> CheckReport:
    """Whether ``phi`` sends solutions of its source to solutions of its target."""
    res = target_residuals(phi)
    bad = [str(Expr.from_rational(r)) for r in res if not r.is_zero()]
    note = "target has no equations" if not res else ""
    return CheckReport([CheckOutcome(f"{phi.name} maps {phi.source.name} into {phi.target.name}", not bad, residuals=bad, note=note)])


def roundtrip_residuals(outer: JetMap, inner: JetMap) -> list:
    """``outer(prolonged inner) - x`` componentwise, over ``inner.source``."""
    comp = _compose([c.rational() for c in outer.components], MapJets(inner))
    return [c - RationalFunction.var(JetVar(s, 0)) for c, s in zip(comp, inner.source.states)]


def check_roundtrip(C: Certificate) -> CheckReport:
    """Both compositions reduce to the identity on base coordinates."""
    checks = []
    for outer, inner in ((C.backward, C.forward), (C.forward, C.backward)):
        res = roundtrip_residuals(outer, inner)
        bad = [str(Expr.from_rational(r)) for r in res if not r.is_zero()]
        checks.append(CheckOutcome(f"{outer.name} o {inner.name} = id on {inner.source.name}", not bad, residuals=bad))
    return CheckReport(checks)


def check_certificate(C: Certificate) -> CheckReport:
    """The exact part: both maps-into checks and both round trips."""
    return check_maps_into(C.forward).merge(check_maps_into(C.backward)).merge(check_roundtrip(C))


def _den_constraints(rfs) -> list:
    out = []
    for rf in rfs:
        if not rf.is_polynomial():
            out.append(Constraint(Expr.from_rational(RationalFunction.poly(rf.den)), "!="))
    return out


def _image_in_domain(phi: JetMap, other: JetMap, samples: int, seed, region) -> CheckOutcome:
    """Sampled check that the prolonged ``phi`` lands in ``other``'s domain."""
    S, T = phi.source, phi.target
    constraints = list(other.domain) + list(T.domain)
    name = f"{phi.name} prolonged lands in the domain of {other.name}"
    if not constraints:
        return CheckOutcome(name, True, "statistical", note="no constraints on the image")
    jets = MapJets(phi)
    needed = set()
    for c in constraints:
        needed |= c.expr.variables()
    bind = jets.bindings(needed)
    exprs = [c.expr.rational().subs(bind) for c in constraints]
    guards = list(phi.domain) + _den_constraints(list(bind.values()) + exprs)
    order = max([phi.order] + [v.order for rf in bind.values() for v in rf.variables()])
    failures = []
    for k in range(samples):
        p = sample_fiber_point(S, (seed, name, k), region, order=max(order, 1), constraints=guards)
        for c, rf in zip(constraints, exprs):
            value = rf.evaluate(p.values)
            if not c.holds_at(value):
                failures.append({"point": p.to_json(), "constraint": str(c), "value": str(value)})
                break
    note = f"{samples} samples"
    return CheckOutcome(name, not failures, "statistical", witnesses=failures[:5], note=note)


def _lift_condition(phi: JetMap) -> CheckOutcome:
    name = f"first jets in the domain of {phi.name} lift to solutions"
    if phi.source.is_trivial():
        return CheckOutcome(name, True, "statistical", note="vacuous for a system without equations")
    # domains live in reduced coordinates, so the x_I derivatives of any jet
    # can be reset to their values on solutions without leaving the domain
    return CheckOutcome(name, True, "statistical", note="holds by construction for reduced-coordinate domains")


def check_domains(C: Certificate, samples: int = 100, seed=0, region=(-2, 2)) -> CheckReport:
    """Sampled image-in-domain conditions in both directions (not a proof)."""
    checks = [
        _image_in_domain(C.forward, C.backward, samples, seed, region),
        _image_in_domain(C.backward, C.forward, samples, seed, region),
        _lift_condition(C.forward),
        _lift_condition(C.backward),
    ]
    return CheckReport(checks)


def effective_order(phi: JetMap) -> int:
    """Highest derivative order of the source ``x_II`` block the map really uses."""
    xII = set(phi.source.x_II)
    top = 0
    for c in phi.components:
        for v in c.variables():
            if v.name in xII and v.order > top:
                top = v.order
    return top


@dataclass(frozen=True)
class RulingLine:
    """A line ``velocity + t * direction`` in the tangent space at ``base``."""

    target: ExplicitSystem
    base: dict       # target state -> value
    velocity: dict   # target state -> first derivative value
    direction: tuple  # aligned with target.states

    def point(self) -> JetPoint:
        vals = {JetVar(s, 0): self.base[s] for s in self.target.states}
        vals.update({JetVar(s, 1): self.velocity[s] for s in self.target.states})
        return JetPoint(vals, 1)


def extract_ruling(phi: JetMap, p: JetPoint, w) -> RulingLine:
    """The line in the target fiber swept by moving ``x_II^(rho+1)`` along ``w``.

    ``rho`` is the effective order of ``phi``; ``p`` must carry reduced
    source coordinates up to order ``rho + 1``.
    """
    rho = effective_order(phi)
    if rho < 1:
        raise ValueError(f"{phi.name} has effective order 0; it induces no line")
    S, T = phi.source, phi.target
    w = [Fraction(x) for x in w]
    if len(w) != S.m:
        raise ValueError(f"direction needs {S.m} entries")
    point = p.values
    base, velocity, direction = {}, {}, []
    for z, comp in zip(T.states, phi.components):
        rf = comp.rational()
        base[z] = rf.evaluate(point)
        velocity[z] = sys_total_derivative_rf(rf, S).evaluate(point)
        direction.append(sum(
            (rf.diff(JetVar(s, rho)).evaluate(point) * wk for s, wk in zip(S.x_II, w)),
            Fraction(0),
        ))
    if all(d == 0 for d in direction):
        raise ZeroDirection("w is in the kernel of the top-order partial derivatives")
    return RulingLine(T, base, velocity, tuple(direction))


def sample_source_point(phi: JetMap, seed=0, region=(-2, 2), order: int | None = None) -> JetPoint:
    """A reduced jet of a solution of the source in the map's domain."""
    order = phi.order + 1 if order is None else order
    guards = list(phi.domain) + _den_constraints(c.rational() for c in phi.components)
    return sample_fiber_point(phi.source, seed, region, order=max(order, 1), constraints=guards)


__all__ = [
    "Certificate", "CheckOutcome", "CheckReport", "InvalidMap", "JetMap", "RegionExhausted",
    "RulingLine", "ZeroDirection", "check_certificate", "check_domains", "check_maps_into",
    "check_roundtrip", "effective_order", "extract_ruling", "roundtrip_residuals",
    "sample_source_point", "target_residuals",
]
