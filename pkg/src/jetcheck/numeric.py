"""Trajectory-level numeric validation.

Integrates ``D(x_I) = f`` with RK4 while ``x_II(t)`` follows prescribed
polynomials, evaluates jets along the result and cross-checks
certificates with two independent velocity routes: the symbolic
prolongation, and centered finite differences of the sampled image.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .equiv import Certificate, JetMap
from .expr import JetVar, lambdify
from .expr.rational import RationalFunction
from .prolong import MapJets, prolong_f
from .system import ExplicitSystem


class DomainViolated(ValueError):
    def __init__(self, t: float, constraint: str = ""):
        super().__init__(f"domain constraint {constraint} fails at t = {t}")
        self.t = t
        self.constraint = constraint


class StepUnstable(ArithmeticError):
    def __init__(self, t: float):
        super().__init__(f"non-finite state at t = {t}")
        self.t = t


class SingularLocusHit(ValueError):
    def __init__(self, t: float, where: str):
        super().__init__(f"denominator of {where} below 1e-8 at t = {t}")
        self.t = t
        self.where = where


SINGULAR_TOL = 1e-8


def _broadcast(values, n: int) -> list:
    return [np.broadcast_to(np.asarray(v, dtype=float), (n,)).copy() for v in values]


def _poly_eval(coeffs: Sequence, t, k: int = 0):
    """``k``-th derivative of the polynomial with ascending ``coeffs``."""
    p = np.polynomial.Polynomial([float(c) for c in coeffs] or [0.0])
    return p.deriv(k)(t) if k else p(t)


@dataclass
class Trajectory:
    system: ExplicitSystem
    t: np.ndarray
    h: float
    controls: dict  # x_II name -> ascending polynomial coefficients
    jets: dict = field(default_factory=dict)  # JetVar -> values on the grid
    order: int = 1

    def __len__(self) -> int:
        return len(self.t)

    @property
    def x(self) -> np.ndarray:
        return np.column_stack([self.jets[JetVar(s, 0)] for s in self.system.states])

    def point(self, k: int) -> dict:
        return {v: float(a[k]) for v, a in self.jets.items()}

    def columns(self) -> list:
        cols = [JetVar(s, 0) for s in self.system.states]
        for i in range(1, self.order + 1):
            cols += [JetVar(s, i) for s in self.system.states]
        return cols

    def to_csv(self, target=None) -> str | None:
        """Write ``t`` and every jet column; return the text when no target is given."""
        buf = io.StringIO() if target is None else None
        fh = buf if target is None else open(target, "w", newline="")
        try:
            w = csv.writer(fh, lineterminator="\n")
            cols = self.columns()
            w.writerow(["t"] + [str(v) for v in cols])
            for k in range(len(self.t)):
                w.writerow([repr(float(self.t[k]))] + [repr(float(self.jets[v][k])) for v in cols])
        finally:
            if target is not None:
                fh.close()
        return buf.getvalue() if buf is not None else None


def _normalize_controls(S: ExplicitSystem, controls) -> dict:
    if isinstance(controls, Mapping):
        out = {s: list(controls[s]) for s in S.x_II}
    else:
        controls = list(controls)
        if len(controls) != S.m:
            raise ValueError(f"need {S.m} control polynomials")
        out = {s: list(c) for s, c in zip(S.x_II, controls)}
    return out


def _normalize_x0(S: ExplicitSystem, x0) -> list:
    if isinstance(x0, Mapping):
        return [float(x0[s]) for s in S.x_I]
    x0 = [float(v) for v in x0]
    if len(x0) == S.n:
        idx = {s: k for k, s in enumerate(S.states)}
        return [x0[idx[s]] for s in S.x_I]
    if len(x0) != len(S.x_I):
        raise ValueError(f"x0 needs {len(S.x_I)} (x_I) or {S.n} (all states) entries")
    return x0


def integrate(S: ExplicitSystem, x0, controls, t_span=(0.0, 1.0), h: float = 1e-3,
              order: int = 1) -> Trajectory:
    """Fixed-step RK4 for ``x_I``; jets up to ``order`` from the prolonged equations.

    ``x0`` gives ``x_I(t0)`` (or every state, in which case the ``x_II``
    entries are ignored: the control polynomials fix them). ``controls``
    maps each ``x_II`` state to ascending polynomial coefficients in ``t``.
    """
    if order < 1:
        raise ValueError("jet order must be at least 1")
    ctrl = _normalize_controls(S, controls)
    y = np.array(_normalize_x0(S, x0), dtype=float)
    t0, t1 = float(t_span[0]), float(t_span[1])
    steps = int(round((t1 - t0) / h))
    if steps < 1 or abs(steps * h - (t1 - t0)) > 1e-9 * max(1.0, abs(t1 - t0)):
        raise ValueError("t_span must be a positive multiple of h")
    t = t0 + h * np.arange(steps + 1)

    xI = [JetVar(s, 0) for s in S.x_I]
    xII = [JetVar(s, 0) for s in S.x_II]
    vII = [JetVar(s, 1) for s in S.x_II]
    f = lambdify(S.f, xI + xII + vII)

    def ctrl_at(tt, k):
        return [_poly_eval(ctrl[s], tt, k) for s in S.x_II]

    def rhs(tt, yy):
        with np.errstate(over="ignore", invalid="ignore"):
            return np.array(f(*yy, *ctrl_at(tt, 0), *ctrl_at(tt, 1)), dtype=float)

    ys = np.empty((steps + 1, len(xI)))
    ys[0] = y
    for k in range(steps):
        tk = t[k]
        k1 = rhs(tk, y)
        k2 = rhs(tk + h / 2, y + h / 2 * k1)
        k3 = rhs(tk + h / 2, y + h / 2 * k2)
        k4 = rhs(tk + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise StepUnstable(float(t[k + 1]))
        ys[k + 1] = y

    n = len(t)
    jets = {v: ys[:, j].copy() for j, v in enumerate(xI)}
    for s in S.x_II:
        for k in range(order + 1):
            jets[JetVar(s, k)] = np.broadcast_to(_poly_eval(ctrl[s], t, k), (n,)).astype(float)
    for i in range(1, order + 1):
        exprs = prolong_f(S, i - 1)
        need = sorted(set().union(*(e.variables() for e in exprs)) if exprs else set())
        vals = lambdify(exprs, need)(*(jets[v] for v in need)) if exprs else ()
        for s, arr in zip(S.x_I, _broadcast(vals, n)):
            jets[JetVar(s, i)] = arr
    traj = Trajectory(S, t, h, ctrl, jets, order)
    _check_domain(traj)
    return traj


def _check_domain(traj: Trajectory) -> None:
    S = traj.system
    for c in S.domain:
        vs = sorted(c.expr.variables())
        vals = _broadcast(lambdify([c.expr], vs)(*(traj.jets[v] for v in vs)), len(traj))[0]
        ok = vals != 0 if c.kind == "!=" else vals > 0
        ok &= np.isfinite(vals)
        if not ok.all():
            raise DomainViolated(float(traj.t[int(np.argmin(ok))]), str(c))


# finite differences -----------------------------------------------------------


def _fd_weights(k: int) -> tuple:
    """Centered ``O(h^2)`` weights for the ``k``-th derivative, exact rationals."""
    p = (k + 1) // 2
    offsets = list(range(-p, p + 1))
    size = len(offsets)
    # solve sum_j w_j o_j^i = i! [i == k], i < size
    A = [[Fraction(o) ** i for o in offsets] for i in range(size)]
    b = [Fraction(0)] * size
    fact = 1
    for i in range(2, k + 1):
        fact *= i
    b[k] = Fraction(fact)
    for col in range(size):
        piv = next(r for r in range(col, size) if A[r][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        b[col], b[piv] = b[piv], b[col]
        for r in range(size):
            if r != col and A[r][col] != 0:
                q = A[r][col] / A[col][col]
                A[r] = [a - q * c for a, c in zip(A[r], A[col])]
                b[r] -= q * b[col]
    return p, [float(b[i] / A[i][i]) for i in range(size)]


def fd_jet(values, order: int, h: float) -> list:
    """Estimates of derivatives ``0..order`` by centered differences.

    Entry ``k`` is an array as long as ``values``; points too close to the
    ends for the stencil are NaN. The error is ``O(h^2)`` for smooth data.
    """
    values = np.asarray(values, dtype=float)
    if order < 0:
        raise ValueError("order must be non-negative")
    if values.ndim != 1 or len(values) < 2 * order + 1:
        raise ValueError(f"need at least {2 * order + 1} samples for order {order}")
    out = [values.copy()]
    n = len(values)
    for k in range(1, order + 1):
        p, w = _fd_weights(k)
        est = np.full(n, np.nan)
        acc = np.zeros(n - 2 * p)
        for j, wj in enumerate(w):
            acc += wj * values[j: n - 2 * p + j]
        est[p: n - p] = acc / h**k
        out.append(est)
    return out


# certificate validation -------------------------------------------------------


@dataclass
class NumericReport:
    h: float
    tol: float
    residual_symbolic: float
    residual_fd: float
    roundtrip_symbolic: float
    roundtrip_fd: float
    samples: int
    series: dict = field(default_factory=dict, repr=False)  # per-time errors, keyed like the maxima

    @property
    def passed(self) -> bool:
        return max(self.residual_symbolic, self.residual_fd,
                   self.roundtrip_symbolic, self.roundtrip_fd) <= self.tol

    def to_json(self) -> dict:
        return {
            "passed": self.passed, "h": self.h, "tol": self.tol, "samples": self.samples,
            "residual_symbolic": self.residual_symbolic, "residual_fd": self.residual_fd,
            "roundtrip_symbolic": self.roundtrip_symbolic, "roundtrip_fd": self.roundtrip_fd,
        }


def _eval_rfs(rfs, jets: Mapping, n: int, label: str, t=None, guard: bool = False) -> list:
    rfs = list(rfs)
    need = sorted(set().union(*(r.variables() for r in rfs)) if rfs else set())
    for v in need:
        if v not in jets:
            raise ValueError(f"trajectory lacks the jet {v}; integrate with a higher order")
    args = [jets[v] for v in need]
    if guard:
        dens = [RationalFunction.poly(r.den) for r in rfs if not r.is_polynomial()]
        if dens:
            for d in _broadcast(lambdify(dens, need)(*args), n):
                if np.any(np.abs(d) < SINGULAR_TOL):
                    k = int(np.argmax(np.abs(d) < SINGULAR_TOL))
                    raise SingularLocusHit(float(t[k]) if t is not None else float(k), label)
    return _broadcast(lambdify(rfs, need)(*args), n) if rfs else []


def _target_residuals(T: ExplicitSystem, z: Mapping, n: int) -> np.ndarray:
    rfs = [e.rational() for e in T.residual_exprs()]
    if not rfs:
        return np.zeros((0, n))
    return np.array(_eval_rfs(rfs, z, n, T.name))


def _map_image(phi: JetMap, jets: Mapping, n: int, t, upto: int) -> dict:
    """Symbolic jets of ``phi`` along the trajectory, orders ``0..upto``."""
    mj = MapJets(phi)
    out = {}
    for l in range(upto + 1):
        vs = [JetVar(z, l) for z in phi.target.states]
        for v, arr in zip(vs, _eval_rfs([mj[v] for v in vs], jets, n, phi.name, t, guard=(l == 0))):
            out[v] = arr
    return out


def _needed_order(psi: JetMap) -> int:
    return max((v.order for c in psi.components for v in c.variables()), default=0)


def validate_certificate_numeric(C: Certificate, traj: Trajectory, tol: float = 1e-6) -> NumericReport:
    """Residual and round-trip errors of ``C`` along an integrated trajectory."""
    phi, psi = C.forward, C.backward
    if traj.system != phi.source:
        raise ValueError("trajectory is not a solution of the certificate's source")
    n, t, h = len(traj), traj.t, traj.h
    r = max(_needed_order(psi), 1)
    zj = _map_image(phi, traj.jets, n, t, r)

    # (a) velocities from the prolonged map
    res_sym = _target_residuals(phi.target, zj, n)
    # (b) velocities from finite differences of the sampled image
    fd = {JetVar(z, 0): zj[JetVar(z, 0)] for z in phi.target.states}
    fd_r = {}
    for z in phi.target.states:
        ests = fd_jet(zj[JetVar(z, 0)], r, h)
        for l, e in enumerate(ests):
            fd_r[JetVar(z, l)] = e
        fd[JetVar(z, 1)] = ests[1]
    res_fd = _target_residuals(phi.target, fd, n)

    p = (r + 1) // 2
    inner = slice(p, n - p) if n > 2 * p else slice(0, 0)
    x = np.array([traj.jets[JetVar(s, 0)] for s in phi.source.states])
    back_sym = np.array(_eval_rfs([c.rational() for c in psi.components], zj, n, psi.name, t, guard=True))
    back_fd = np.array(_eval_rfs([c.rational() for c in psi.components], fd_r, n, psi.name))

    def pointwise(a, sl=slice(None)):
        out = np.full(n, np.nan)
        out[sl] = np.max(np.abs(a[:, sl]), axis=0) if a.size else 0.0
        return out

    series = {
        "residual_symbolic": pointwise(res_sym),
        "residual_fd": pointwise(res_fd, slice(1, n - 1)),
        "roundtrip_symbolic": pointwise(back_sym - x),
        "roundtrip_fd": pointwise(back_fd - x, inner),
    }
    worst = {k: float(np.nanmax(v)) if np.any(np.isfinite(v)) else 0.0 for k, v in series.items()}
    return NumericReport(h=h, tol=tol, samples=n, series={"t": t, **series}, **worst)


@dataclass
class HalvingStudy:
    coarse: NumericReport
    fine: NumericReport

    def ratio(self, key: str = "residual_fd") -> float:
        """Worst error at shared grid times, coarse over fine.

        The fine grid has every coarse time at even indices; comparing on
        those times keeps edge points of the finer grid out of the maximum.
        """
        a = self.coarse.series[key]
        b = self.fine.series[key][::2][: len(a)]
        ok = np.isfinite(a) & np.isfinite(b)
        num, den = float(np.max(a[ok])), float(np.max(b[ok]))
        return float("inf") if den == 0 else num / den

    def to_json(self) -> dict:
        return {
            "coarse": self.coarse.to_json(), "fine": self.fine.to_json(),
            "ratio_residual_fd": self.ratio("residual_fd"),
            "ratio_roundtrip_fd": self.ratio("roundtrip_fd"),
        }


def halving_study(C: Certificate, x0, controls, t_span=(0.0, 1.0), h: float = 1e-3,
                  tol: float = 1e-6) -> HalvingStudy:
    """Validate at ``h`` and ``h/2``; finite-difference errors should drop about 4x."""
    order = max(C.forward.order + _needed_order(C.backward), 1) + 1
    reports = []
    for hh in (h, h / 2):
        traj = integrate(C.source, x0, controls, t_span, hh, order)
        reports.append(validate_certificate_numeric(C, traj, tol))
    return HalvingStudy(*reports)


__all__ = [
    "DomainViolated", "HalvingStudy", "NumericReport", "SingularLocusHit", "StepUnstable",
    "Trajectory", "fd_jet", "halving_study", "integrate", "validate_certificate_numeric",
]
