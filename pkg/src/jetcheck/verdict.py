"""Static equivalence and sampled non-equivalence verdicts.

Verdicts are one-sided: a NOT_* outcome comes with witness points at which
a fiber provably carries no line of sufficient contact, and everything
else is UNKNOWN. Dynamic equivalence is never asserted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .equiv import CheckOutcome, CheckReport, JetMap, _den_constraints
from .expr import Expr, JetVar
from .expr.rational import RationalFunction
from .prolong import reduce_rf
from .ruled import NotFound, RuledVerdict, is_ruled_sampled, recheck_witness
from .system import ExplicitSystem, sample_fiber_point

NOT_DYNAMIC_EQUIVALENT = "NOT_DYNAMIC_EQUIVALENT"
NOT_FLAT = "NOT_FLAT"
UNKNOWN = "UNKNOWN"
DISPROVED = "DISPROVED"

#: Sampled invariants need at least this many agreeing points.
MIN_AGREEING = 30


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class RuledParams:
    n_points: int = 100
    N: int | None = None
    seed: object = 0
    region: tuple = (-2, 2)
    jobs: int = 1

    def run(self, S: ExplicitSystem) -> RuledVerdict:
        return is_ruled_sampled(S, self.n_points, self.N, self.seed, region=self.region, jobs=self.jobs)


@dataclass(frozen=True)
class StaticCertificate:
    """A state map ``phi`` (order 0) with its declared inverse ``psi``."""

    name: str
    phi: JetMap
    psi: JetMap

    def __post_init__(self):
        for m in (self.phi, self.psi):
            if m.order != 0:
                raise ValueError(f"{self.name}: {m.name} must have order 0")
        if self.phi.source != self.psi.target or self.phi.target != self.psi.source:
            raise ValueError(f"{self.name}: maps do not pair up")


def _inverse_residuals(outer: JetMap, inner: JetMap) -> list:
    bind = {JetVar(z, 0): c.rational() for z, c in zip(inner.target.states, inner.components)}
    return [
        c.rational().subs(bind) - RationalFunction.var(JetVar(s, 0))
        for c, s in zip(outer.components, inner.source.states)
    ]


def _pushforward_residuals(phi: JetMap) -> list:
    """Target residuals at ``z = phi(x)``, ``zdot = Dphi(x) xdot``, reduced on the source."""
    S, T = phi.source, phi.target
    bind = {}
    for z, c in zip(T.states, phi.components):
        rf = c.rational()
        bind[JetVar(z, 0)] = rf
        vel = RationalFunction.const(0)
        for s in S.states:
            d = rf.diff(JetVar(s, 0))
            if not d.is_zero():
                vel = vel + d * RationalFunction.var(JetVar(s, 1))
        bind[JetVar(z, 1)] = vel
    out = []
    for e in T.residual_exprs():
        rf = e.rational()
        out.append(reduce_rf(rf.subs({v: bind[v] for v in rf.variables()}), S))
    return out


def _jacobian_check(phi: JetMap, samples: int, seed, region) -> CheckOutcome:
    S = phi.source
    parts = [[c.rational().diff(JetVar(s, 0)) for s in S.states] for c in phi.components]
    guards = list(phi.domain) + _den_constraints(c.rational() for c in phi.components)
    bad = []
    for k in range(samples):
        p = sample_fiber_point(S, (seed, "jacobian", phi.name, k), region, constraints=guards)
        J = np.array([[float(d.evaluate(p.values)) for d in row] for row in parts])
        s = np.linalg.svd(J, compute_uv=False)
        if s.size == 0 or s[-1] <= 1e-9 * max(s[0], 1.0):
            bad.append({"point": p.to_json(), "smallest_singular_value": float(s[-1]) if s.size else 0.0})
    return CheckOutcome(
        f"Jacobian of {phi.name} is invertible", not bad, "statistical",
        witnesses=bad[:5], note=f"{samples} samples",
    )


def check_static_certificate(S: ExplicitSystem, Sp: ExplicitSystem, C: StaticCertificate,
                             samples: int = 30, seed=0, region=(-2, 2)) -> CheckReport:
    if S.n != Sp.n:
        raise DimensionMismatch(f"{S.name} has {S.n} states, {Sp.name} has {Sp.n}")
    if C.phi.source != S or C.phi.target != Sp:
        raise ValueError(f"{C.name} does not map {S.name} to {Sp.name}")
    checks = []
    for outer, inner in ((C.psi, C.phi), (C.phi, C.psi)):
        bad = [str(Expr.from_rational(r)) for r in _inverse_residuals(outer, inner) if not r.is_zero()]
        checks.append(CheckOutcome(f"{outer.name} o {inner.name} = id", not bad, residuals=bad))
    for m in (C.phi, C.psi):
        bad = [str(Expr.from_rational(r)) for r in _pushforward_residuals(m) if not r.is_zero()]
        checks.append(CheckOutcome(
            f"{m.name} pushes {m.source.name} onto {m.target.name}", not bad, residuals=bad,
        ))
    checks.append(_jacobian_check(C.phi, samples, seed, region))
    return CheckReport(checks)


# invariants -----------------------------------------------------------------


def _hessian(S: ExplicitSystem) -> list:
    vel = [JetVar(s, 1) for s in S.x_II]
    out = []
    for e in S.f:
        rf = e.rational()
        firsts = [rf.diff(v) for v in vel]
        for i, d in enumerate(firsts):
            for v in vel[i:]:
                out.append(d.diff(v))
    return out


def is_affine_fiber(S: ExplicitSystem) -> bool:
    """All second partials of ``f`` in the ``D(x_II)`` variables vanish."""
    return all(h.is_zero() for h in _hessian(S))


def nonaffine_at(S: ExplicitSystem, p) -> bool:
    point = p.values if hasattr(p, "values") else p
    return any(h.evaluate(point) != 0 for h in _hessian(S) if not h.is_zero())


@dataclass
class Obstruction:
    status: str  # DISPROVED or UNKNOWN
    reason: str = ""
    details: dict = field(default_factory=dict)

    @property
    def disproved(self) -> bool:
        return self.status == DISPROVED

    def to_json(self) -> dict:
        return {"status": self.status, "reason": self.reason, **self.details}


def _uniformly_nonaffine(S: ExplicitSystem, samples: int, seed, region) -> bool:
    if samples < MIN_AGREEING:
        return False
    return all(
        nonaffine_at(S, sample_fiber_point(S, (seed, "affine", k), region))
        for k in range(samples)
    )


def _uniform_ruledness(v: RuledVerdict) -> str | None:
    """"ruled" or "not ruled" when every sample (at least MIN_AGREEING) agrees."""
    if len(v.results) < MIN_AGREEING:
        return None
    if all(isinstance(r, NotFound) and r.exact for r in v.results):
        return "not ruled"
    if v.outcome == "RULED_EVIDENCE":
        return "ruled"
    return None


def static_obstruction(S: ExplicitSystem, Sp: ExplicitSystem, samples: int = MIN_AGREEING,
                       seed=0, *, region=(-2, 2), jobs: int = 1, ruled: tuple | None = None) -> Obstruction:
    """Compare invariants of fibers under linear isomorphisms.

    ``ruled`` may pass precomputed ``(RuledVerdict, RuledVerdict)``.
    """
    if S.n != Sp.n:
        return Obstruction(DISPROVED, "state dimension mismatch", {"n": S.n, "n_prime": Sp.n})
    if S.m != Sp.m:
        return Obstruction(DISPROVED, "fiber dimension mismatch", {"m": S.m, "m_prime": Sp.m})
    aff = is_affine_fiber(S), is_affine_fiber(Sp)
    if aff[0] != aff[1]:
        other = Sp if aff[0] else S
        if _uniformly_nonaffine(other, samples, seed, region):
            return Obstruction(DISPROVED, "affine vs non-affine fiber", {
                "affine": S.name if aff[0] else Sp.name,
                "non_affine": other.name,
                "samples": samples,
            })
    if ruled is None:
        ruled = tuple(is_ruled_sampled(T, samples, None, seed, region=region, jobs=jobs) for T in (S, Sp))
    kinds = [_uniform_ruledness(v) for v in ruled]
    if None not in kinds and kinds[0] != kinds[1]:
        return Obstruction(DISPROVED, "ruled vs non-ruled fiber", {
            S.name: kinds[0], Sp.name: kinds[1], "samples": min(len(v.results) for v in ruled),
        })
    return Obstruction(UNKNOWN)


# verdicts ----------------------------------------------------------------


@dataclass
class Verdict:
    outcome: str
    case: str = ""
    obstruction: Obstruction | None = None
    ruledness: dict = field(default_factory=dict)  # system name -> RuledVerdict
    witness_system: str = ""
    note: str = ""

    @property
    def witnesses(self) -> list:
        v = self.ruledness.get(self.witness_system)
        return v.witnesses if v is not None else []

    @property
    def mixed(self) -> bool:
        return any(v.mixed for v in self.ruledness.values())

    def to_json(self) -> dict:
        out = {"outcome": self.outcome}
        if self.case:
            out["case"] = self.case
        if self.obstruction is not None:
            out["static_obstruction"] = self.obstruction.to_json()
        if self.ruledness:
            out["ruledness"] = {k: v.to_json() for k, v in sorted(self.ruledness.items())}
        if self.witness_system:
            out["witness_system"] = self.witness_system
        out["mixed_samples"] = self.mixed
        if self.note:
            out["note"] = self.note
        return out


def recheck(verdict: Verdict, systems: dict, N: int | None = None) -> bool:
    """Re-run the exact search at every witness of a NOT_* verdict."""
    if verdict.outcome == UNKNOWN:
        return True
    S = systems[verdict.witness_system]
    ws = verdict.witnesses
    return bool(ws) and all(recheck_witness(S, w, N) for w in ws)


def nonequivalence_verdict(S: ExplicitSystem, Sp: ExplicitSystem, params: RuledParams = RuledParams()) -> Verdict:
    if S.n < Sp.n:
        v = params.run(Sp)
        if v.outcome == "NOT_RULED":
            return Verdict(NOT_DYNAMIC_EQUIVALENT, "n<n'", ruledness={Sp.name: v}, witness_system=Sp.name,
                           note=f"{Sp.name} is not ruled at the witness points")
        return Verdict(UNKNOWN, "n<n'", ruledness={Sp.name: v})
    if S.n > Sp.n:
        v = params.run(S)
        if v.outcome == "NOT_RULED":
            return Verdict(NOT_DYNAMIC_EQUIVALENT, "n>n'", ruledness={S.name: v}, witness_system=S.name,
                           note=f"{S.name} is not ruled at the witness points")
        return Verdict(UNKNOWN, "n>n'", ruledness={S.name: v})
    keys = (S.name, Sp.name if Sp.name != S.name else Sp.name + "'")
    first = params.run(S)
    rv = {keys[0]: first, keys[1]: first if Sp == S else params.run(Sp)}
    obs = static_obstruction(S, Sp, min(params.n_points, MIN_AGREEING), params.seed,
                             region=params.region, jobs=params.jobs, ruled=(rv[keys[0]], rv[keys[1]]))
    if obs.disproved:
        for key in keys:
            if rv[key].outcome == "NOT_RULED":
                return Verdict(NOT_DYNAMIC_EQUIVALENT, "n=n'", obs, rv, key,
                               note=f"not static equivalent and {key} is not ruled at the witness points")
    return Verdict(UNKNOWN, "n=n'", obs, rv)


def flatness_verdict(S: ExplicitSystem, params: RuledParams = RuledParams()) -> Verdict:
    v = params.run(S)
    if v.outcome == "NOT_RULED":
        return Verdict(NOT_FLAT, ruledness={S.name: v}, witness_system=S.name,
                       note=f"{S.name} is not ruled at the witness points")
    return Verdict(UNKNOWN, ruledness={S.name: v})


__all__ = [
    "DISPROVED", "NOT_DYNAMIC_EQUIVALENT", "NOT_FLAT", "UNKNOWN", "DimensionMismatch",
    "Obstruction", "RuledParams", "StaticCertificate", "Verdict", "check_static_certificate",
    "flatness_verdict", "is_affine_fiber", "nonequivalence_verdict", "recheck", "static_obstruction",
]
