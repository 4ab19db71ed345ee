"""Ruledness of velocity sets through line contact.

At a point ``(x, xdot)`` of a system the velocity set is the graph
``D(x_I) = f(x, D(x_II))``. A line ``xdot + lam * w`` has contact order
``k`` when the residuals, expanded in ``lam``, first fail to vanish at
``lam^k``; it lies in the velocity set (infinite contact) when they vanish
identically. A velocity set is ruled when such a line passes through
every point, and a line with contact of order ``n + 1`` suffices.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import realroots
from .expr import Const, Expr, JetVar
from .expr.poly import Poly
from .expr.rational import RationalFunction
from .system import (
    DenominatorVanishes,
    ExplicitSystem,
    JetPoint,
    sample_fiber_point,
)

INFINITE = math.inf

#: Line parameter and free direction parameters; not valid DSL identifiers.
LAM = JetVar("λ", 0)
_TAU = "τ"

NEWTON_RESTARTS = 64
NEWTON_ITERATIONS = 50
NEWTON_TOL = 1e-12


class PointNotOnFiber(ValueError):
    pass


@dataclass
class ContactReport:
    point: JetPoint
    direction: tuple
    achieved_order: float  # int, or INFINITE
    coefficients: list  # per residual: [c_0, ..., c_N] of the lam-series

    @property
    def infinite(self) -> bool:
        return self.achieved_order == INFINITE

    def has_contact(self, N: int) -> bool:
        """Coefficients of ``lam^1 .. lam^N`` all vanish."""
        return self.achieved_order > N

    @property
    def unit_direction(self) -> tuple:
        norm = math.sqrt(sum(float(x) ** 2 for x in self.direction))
        return tuple(float(x) / norm for x in self.direction)

    def to_json(self) -> dict:
        return {
            "point": self.point.to_json(),
            "direction": [str(x) for x in self.direction],
            "achieved_order": "INFINITE" if self.infinite else int(self.achieved_order),
        }


@dataclass
class RulingCertificate:
    point: JetPoint
    direction: tuple  # over all states; Fractions when exact
    extent: tuple | None  # (lam_minus, lam_plus), floats with +-inf
    contact: ContactReport | None
    status: str  # "exact", "exact-existence" (irrational direction), "numeric"

    @property
    def verified(self) -> bool:
        return self.status in ("exact", "exact-existence")

    def to_json(self) -> dict:
        out = {
            "point": self.point.to_json(),
            "direction": [str(x) for x in self.direction],
            "status": self.status,
        }
        if self.extent is not None:
            out["extent"] = [_fmt_float(x) for x in self.extent]
        if self.contact is not None:
            out["contact"] = "INFINITE" if self.contact.infinite else int(self.contact.achieved_order)
        return out


@dataclass
class NotFound:
    point: JetPoint
    exact: bool
    floor: float | None = None
    reason: str = ""

    def to_json(self) -> dict:
        out = {"point": self.point.to_json(), "exact": self.exact, "reason": self.reason}
        if self.floor is not None:
            out["floor"] = self.floor
        return out


def _fmt_float(x) -> str:
    if x == math.inf:
        return "inf"
    if x == -math.inf:
        return "-inf"
    return repr(float(x))


# --------------------------------------------------------------------------


def _line_bindings(S: ExplicitSystem, p: JetPoint, w: Sequence, lam=LAM) -> dict:
    bind = {}
    lam_rf = RationalFunction.var(lam)
    for s, ws in zip(S.states, w):
        bind[JetVar(s, 0)] = RationalFunction.const(p[JetVar(s, 0)])
        v1 = JetVar(s, 1)
        bind[v1] = RationalFunction.const(p[v1]) + lam_rf * RationalFunction.const(ws)
    return bind


def _uni(poly: Poly, v: JetVar) -> list:
    """Coefficients (ascending) of a polynomial in the single variable ``v``."""
    coeffs = poly.coeffs_in(v)
    out = [Fraction(0)] * (max(coeffs, default=0) + 1)
    for e, c in coeffs.items():
        if not c.is_constant():
            raise ValueError("expected a univariate polynomial")
        out[e] = c.constant_value()
    return out


def _series(num: list, den: list, N: int) -> list:
    """First ``N + 1`` coefficients of ``num/den`` around 0 (``den[0] != 0``)."""
    out = []
    for j in range(N + 1):
        acc = num[j] if j < len(num) else Fraction(0)
        for l in range(1, j + 1):
            if l < len(den):
                acc -= den[l] * out[j - l]
        out.append(acc / den[0])
    return out


def _exact_point(p: JetPoint) -> JetPoint:
    return JetPoint({v: Fraction(x) for v, x in p.values.items()}, p.order)


def _check_on_fiber(S: ExplicitSystem, p: JetPoint) -> None:
    for e in S.f:
        den = e.rational().den
        if den.evaluate(p.values) == 0:
            raise DenominatorVanishes(f"denominator of {e} vanishes at the point")
    for e in S.residual_exprs():
        if e.rational().evaluate(p.values) != 0:
            raise PointNotOnFiber(f"residual {e} is nonzero at the point")


def contact_order(S: ExplicitSystem, p: JetPoint, w: Sequence, N: int | None = None) -> ContactReport:
    """Contact order of the line ``(x, xdot + lam * w)`` with the velocity set.

    The expansion is exact: each residual is a rational function of
    ``lam`` whose numerator is a polynomial, so INFINITE means the whole
    line (away from poles) lies in the velocity set.
    """
    N = S.n + 1 if N is None else N
    p = _exact_point(p)
    w = tuple(Fraction(x) for x in w)
    if len(w) != S.n:
        raise ValueError(f"direction needs {S.n} entries")
    if all(x == 0 for x in w):
        raise ValueError("direction must be nonzero")
    _check_on_fiber(S, p)
    bind = _line_bindings(S, p, w)
    achieved = INFINITE
    coeffs = []
    for e in S.residual_exprs():
        rf = e.rational().subs(bind)
        num = _uni(rf.num, LAM)
        den = _uni(rf.den, LAM)
        coeffs.append(_series(num, den, N))
        nz = next((j for j, c in enumerate(num) if c != 0), None)
        if nz is not None and nz < achieved:
            achieved = nz
    return ContactReport(p, w, achieved, coeffs)


# --------------------------------------------------------------------------


def _direction_system(S: ExplicitSystem, p: JetPoint, chart: int, N: int):
    """Series coefficients ``c_j`` (``j <= N``) of ``f_i(x, D(x_II) + lam w_II)``.

    ``w_II`` has entry ``chart`` fixed to 1 and the others free (variables
    ``tau_k``). Returns the free variables and, per equation, the list of
    coefficients as polynomials in them.
    """
    m = S.m
    taus = [JetVar(f"{_TAU}{k}", 0) for k in range(m - 1)]
    w_II = []
    it = iter(taus)
    for j in range(m):
        w_II.append(Poly.const(1) if j == chart else Poly.var(next(it)))
    lam = Poly.var(LAM)
    bind = {JetVar(s, 0): RationalFunction.const(p[JetVar(s, 0)]) for s in S.states}
    for s, wj in zip(S.x_II, w_II):
        bind[JetVar(s, 1)] = RationalFunction.poly(Poly.const(p[JetVar(s, 1)]) + lam * wj)
    out = []
    for e in S.f:
        rf = e.rational().subs(bind)
        P = rf.num.coeffs_in(LAM)
        Q = rf.den.coeffs_in(LAM)
        q0 = Q.get(0)
        if q0 is None or not q0.is_constant():
            raise DenominatorVanishes("denominator depends on the direction at lam = 0")
        inv0 = 1 / q0.constant_value()
        cs = []
        for j in range(N + 1):
            acc = P.get(j, Poly())
            for l in range(1, j + 1):
                ql = Q.get(l)
                if ql is not None:
                    acc = acc - ql * cs[j - l]
            cs.append(acc.scale(inv0))
        out.append(cs)
    return taus, w_II, out


def _assemble(S: ExplicitSystem, w_II: list, series: list, values: dict) -> tuple:
    wII = [wj.evaluate(values) if not wj.is_constant() else wj.constant_value() for wj in w_II]
    wI = [cs[1].evaluate(values) if cs[1].variables() else cs[1].constant_value() for cs in series]
    full = dict(zip(S.x_I, wI))
    full.update(zip(S.x_II, wII))
    return tuple(full[s] for s in S.states)


def _certify(S: ExplicitSystem, p: JetPoint, w: tuple, N: int, status: str):
    report = contact_order(S, p, w, N)
    if not report.has_contact(N):
        return None
    extent = line_extent(S, p, w) if report.infinite else None
    return RulingCertificate(p, w, extent, report, status)


def _univariate_search(S, p, N):
    """Exact search when at most one direction parameter is free."""
    for chart in reversed(range(S.m)):
        taus, w_II, series = _direction_system(S, p, chart, N)
        conds = [c for cs in series for c in cs[2:] if not c.is_zero()]
        if not conds:
            values = {t: Fraction(0) for t in taus}
            return _certify(S, p, _assemble(S, w_II, series, values), N, "exact") or _fail()
        if not taus:
            continue
        (tau,) = taus
        G = [Fraction(0)]
        for c in conds:
            G = realroots.gcd(G, _uni(c, tau))
            if len(G) <= 1:
                break
        if len(G) <= 1:
            continue
        roots = realroots.real_roots(G)
        if not roots:
            continue
        for r in roots:
            exact = realroots.rational_root_near(G, r)
            if exact is not None:
                cert = _certify(S, p, _assemble(S, w_II, series, {tau: exact}), N, "exact")
                if cert is not None:
                    return cert
        # irrational root: the line exists, its direction is only approximated
        w = _assemble(S, w_II, series, {tau: roots[0]})
        report = contact_order(S, p, w, N)
        return RulingCertificate(p, w, None, report, "exact-existence")
    return NotFound(p, True, reason="no real direction cancels the coefficients of lam^2..lam^N")


def _fail():
    raise AssertionError("elimination produced a direction that does not verify")


def _newton_search(S, p, N, attempts, seed):
    rng = random.Random(f"newton:{seed}")
    floor = math.inf
    found = None
    for chart in reversed(range(S.m)):
        taus, w_II, series = _direction_system(S, p, chart, N)
        conds = [c for cs in series for c in cs[2:] if not c.is_zero()]
        if not conds:
            values = {t: Fraction(0) for t in taus}
            cert = _certify(S, p, _assemble(S, w_II, series, values), N, "exact")
            if cert is not None:
                return cert
        jac = [[c.diff(t) for t in taus] for c in conds]
        for _ in range(attempts):
            t = np.array([rng.uniform(-1, 1) for _ in taus])
            for _ in range(NEWTON_ITERATIONS):
                point = dict(zip(taus, t))
                F = np.array([float(c.evaluate(point, 1.0)) for c in conds])
                norm = float(np.linalg.norm(F))
                if norm <= NEWTON_TOL or not np.isfinite(norm):
                    break
                J = np.array([[float(d.evaluate(point, 1.0)) for d in row] for row in jac])
                step, *_ = np.linalg.lstsq(J, -F, rcond=None)
                t = t + step
            point = dict(zip(taus, t))
            F = np.array([float(c.evaluate(point, 1.0)) for c in conds])
            norm = float(np.linalg.norm(F))
            floor = min(floor, norm)
            if norm <= NEWTON_TOL:
                exact = {tau: Fraction(float(x)).limit_denominator(10**6) for tau, x in zip(taus, t)}
                cert = _certify(S, p, _assemble(S, w_II, series, exact), N, "exact")
                if cert is not None:
                    return cert
                if found is None:
                    vals = {tau: Fraction(float(x)) for tau, x in zip(taus, t)}
                    w = _assemble(S, w_II, series, vals)
                    found = RulingCertificate(p, w, None, None, "numeric")
    if found is not None:
        return found
    return NotFound(p, False, floor=floor, reason="Newton search found no direction (heuristic)")


def find_ruling(
    S: ExplicitSystem,
    p: JetPoint,
    N: int | None = None,
    attempts: int = NEWTON_RESTARTS,
    seed=0,
) -> RulingCertificate | NotFound:
    """Search for a line through ``p`` with contact at least ``N`` (default ``n + 1``).

    The ``x_I`` part of the direction is fixed by the ``lam^1`` terms, so
    only ``w_II`` is unknown; after fixing one of its entries to 1 the
    remaining ``m - 1`` unknowns enter polynomially. With at most one
    unknown the search is an exact gcd-and-Sturm elimination and a
    NotFound is a proof; otherwise it is Newton's method with restarts.
    """
    N = S.n + 1 if N is None else N
    p = _exact_point(p)
    _check_on_fiber(S, p)
    if S.is_trivial():
        w = tuple(Fraction(1 if k == 0 else 0) for k in range(S.n))
        return _certify(S, p, w, N, "exact")
    if S.m == 0:
        return NotFound(p, True, reason="the velocity set is a single point")
    if S.m <= 2:
        return _univariate_search(S, p, N)
    return _newton_search(S, p, N, attempts, seed)


def line_extent(S: ExplicitSystem, p: JetPoint, w: Sequence, tol=Fraction(1, 10**10)) -> tuple:
    """Largest open ``lam``-interval around 0 on which the line stays admissible.

    Endpoints are the nearest real roots, on each side, of the domain
    constraints and of the denominators of ``f`` restricted to the line.
    """
    report = contact_order(S, p, w)
    if not report.infinite:
        raise ValueError("line_extent needs a line lying in the velocity set")
    p = report.point
    bind = _line_bindings(S, p, report.direction)
    exprs = [c.expr.rational() for c in S.domain]
    exprs += [RationalFunction.poly(e.rational().den) for e in S.f]
    lo, hi = -math.inf, math.inf
    for rf in exprs:
        r = rf.subs(bind)
        for poly in (r.num, r.den):
            coeffs = realroots.trim(_uni(poly, LAM))
            if len(coeffs) <= 1:
                continue
            neg, pos = realroots.nearest_roots(coeffs, tol)
            if neg is not None:
                lo = max(lo, float(neg))
            if pos is not None:
                hi = min(hi, float(pos))
    return lo, hi


# --------------------------------------------------------------------------


@dataclass
class RuledVerdict:
    outcome: str  # RULED_EVIDENCE, NOT_RULED, INCONCLUSIVE
    results: list = field(default_factory=list)

    @property
    def witnesses(self) -> list:
        return [r for r in self.results if isinstance(r, NotFound) and r.exact]

    @property
    def rulings(self) -> list:
        return [r for r in self.results if isinstance(r, RulingCertificate)]

    @property
    def mixed(self) -> bool:
        return bool(self.witnesses) and bool(self.rulings)

    def to_json(self, limit: int = 5) -> dict:
        return {
            "outcome": self.outcome,
            "points": len(self.results),
            "verified_rulings": sum(1 for r in self.rulings if r.verified),
            "exact_not_found": len(self.witnesses),
            "mixed": self.mixed,
            "witnesses": [w.to_json() for w in self.witnesses[:limit]],
            "rulings": [r.to_json() for r in self.rulings[:limit]],
        }


def _probe(args):
    S, k, N, seed, region, attempts = args
    p = sample_fiber_point(S, (seed, "ruled", k), region)
    return find_ruling(S, p, N, attempts, (seed, k))


def is_ruled_sampled(
    S: ExplicitSystem,
    n_points: int = 100,
    N: int | None = None,
    seed=0,
    *,
    region=(-2, 2),
    attempts: int = NEWTON_RESTARTS,
    jobs: int = 1,
) -> RuledVerdict:
    """Probe ruledness at ``n_points`` seeded points of ``S``."""
    tasks = [(S, k, N, seed, region, attempts) for k in range(n_points)]
    if jobs > 1 and n_points > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_probe, tasks))
    else:
        results = [_probe(t) for t in tasks]
    if any(isinstance(r, NotFound) and r.exact for r in results):
        outcome = "NOT_RULED"
    elif all(isinstance(r, RulingCertificate) and r.verified for r in results):
        outcome = "RULED_EVIDENCE"
    else:
        outcome = "INCONCLUSIVE"
    return RuledVerdict(outcome, results)


def recheck_witness(S: ExplicitSystem, witness: NotFound, N: int | None = None) -> bool:
    """Independently re-run the exact search at a witness point."""
    again = find_ruling(S, witness.point, N)
    return isinstance(again, NotFound) and again.exact


__all__ = [
    "INFINITE", "ContactReport", "NotFound", "PointNotOnFiber", "RuledVerdict",
    "RulingCertificate", "contact_order", "find_ruling", "is_ruled_sampled",
    "line_extent", "recheck_witness",
]
