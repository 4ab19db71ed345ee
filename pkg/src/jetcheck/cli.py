"""Command-line front end.

Exit codes: 0 when checks pass or the outcome is RULED_EVIDENCE, UNKNOWN or
INCONCLUSIVE; 1 when a check fails or a NOT_* outcome is reached; 2 on usage
and input errors. ``--report PATH`` writes a JSON document (sorted keys,
no timings unless ``--timings``) so equal inputs give byte-identical files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from fractions import Fraction

from . import __version__
from .dsl import ParseError, parse, parse_expr
from .equiv import InvalidMap, check_certificate, check_domains
from .expr import Expr
from .numeric import (
    DomainViolated,
    SingularLocusHit,
    StepUnstable,
    integrate,
    validate_certificate_numeric,
)
from .prolong import prolong_system, reduce
from .ruled import is_ruled_sampled
from .system import InvalidSystem, RegionExhausted
from .verdict import (
    RuledParams,
    StaticCertificate,
    check_static_certificate,
    flatness_verdict,
    nonequivalence_verdict,
    static_obstruction,
)


class UsageError(Exception):
    pass


def _jobs(value) -> int:
    if value is not None:
        return max(1, value)
    env = os.environ.get("JETCHECK_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"JETCHECK_JOBS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return parse(text), hashlib.sha256(text.encode()).hexdigest()
    except ParseError as exc:
        raise UsageError(f"{path}:{exc}") from None


def _get(table: dict, name: str, what: str):
    if name not in table:
        known = ", ".join(sorted(table)) or "none"
        raise UsageError(f"no {what} named {name!r} (known: {known})")
    return table[name]


def _floats(text: str) -> list:
    try:
        return [float(Fraction(p)) for p in text.split(",") if p.strip()]
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


# commands -----------------------------------------------------------------


def cmd_validate(args, src, out):
    decls = []
    for kind, name in src.order:
        entry = {"kind": kind, "name": name}
        if kind == "system":
            S = src.systems[name]
            entry.update(n=S.n, m=S.m, equations=len(S.f))
            print(f"system {name}: n={S.n}, m={S.m}, {len(S.f)} equation(s)")
        elif kind == "map":
            phi = src.maps[name]
            entry.update(source=phi.source.name, target=phi.target.name, order=phi.order)
            print(f"map {name}: {phi.source.name} -> {phi.target.name}, order {phi.order}")
        else:
            C = src.certificates[name]
            entry.update(forward=C.forward.name, backward=C.backward.name)
            print(f"certificate {name}: {C.forward.name} / {C.backward.name}")
        decls.append(entry)
    print("valid")
    out.update(passed=True, declarations=decls)
    return 0


def cmd_prolong(args, src, out):
    S = _get(src.systems, args.system, "system")
    P = prolong_system(S, args.order)
    eqs = [[str(v), str(e)] for v, e in P.equations]
    for v, e in eqs:
        print(f"{v} = {e}")
    out.update(system=S.name, order=args.order, equations=eqs)
    return 0


def cmd_reduce(args, src, out):
    S = _get(src.systems, args.system, "system")
    try:
        e = parse_expr(args.expr, S.states)
    except ParseError as exc:
        raise UsageError(f"--expr: {exc}") from None
    r = reduce(e, S)
    print(r)
    out.update(system=S.name, expr=str(e), reduced=str(r))
    return 0


def cmd_check_cert(args, src, out):
    C = _get(src.certificates, args.cert, "certificate")
    report = check_certificate(C)
    if args.samples > 0:
        report = report.merge(check_domains(C, args.samples, args.seed))
    print(report.summary())
    print("PASS" if report.passed else "FAIL")
    out.update(certificate=C.name, **report.to_json())
    return 0 if report.passed else 1


def cmd_check_static(args, src, out):
    C = _get(src.certificates, args.cert, "certificate")
    try:
        SC = StaticCertificate(C.name, C.forward, C.backward)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = check_static_certificate(C.source, C.target, SC, args.samples, args.seed)
    print(report.summary())
    print("PASS" if report.passed else "FAIL")
    out.update(certificate=C.name, **report.to_json())
    return 0 if report.passed else 1


def cmd_ruled(args, src, out):
    S = _get(src.systems, args.system, "system")
    v = is_ruled_sampled(S, args.points, args.order, args.seed, jobs=args.jobs)
    rulings = v.rulings
    infinite = sum(1 for r in rulings if r.contact is not None and r.contact.infinite)
    print(f"{S.name}: {v.outcome}")
    print(f"  points: {len(v.results)}; verified rulings: {sum(r.verified for r in rulings)} "
          f"({infinite} with infinite contact); exact non-existence: {len(v.witnesses)}")
    if v.mixed:
        print("  note: sampled outcomes are mixed (some points ruled, some not)")
    for w in v.witnesses[:3]:
        print(f"  witness: {w.point.to_json()}")
    out.update(system=S.name, n=S.n, m=S.m, contact_target=args.order or S.n + 1,
               infinite_contact=infinite, **v.to_json())
    return 1 if v.outcome == "NOT_RULED" else 0


def cmd_verdict(args, src, out):
    S = _get(src.systems, args.left, "system")
    Sp = _get(src.systems, args.right, "system")
    params = RuledParams(args.points, args.order, args.seed, jobs=args.jobs)
    v = nonequivalence_verdict(S, Sp, params)
    print(f"{S.name} vs {Sp.name}: {v.outcome} (case {v.case})")
    if v.obstruction is not None:
        print(f"  static obstruction: {v.obstruction.status}"
              + (f" ({v.obstruction.reason})" if v.obstruction.reason else ""))
    if v.note:
        print(f"  {v.note}")
    out.update(left=S.name, right=Sp.name, **v.to_json())
    return 1 if v.outcome.startswith("NOT_") else 0


def cmd_flatness(args, src, out):
    S = _get(src.systems, args.system, "system")
    v = flatness_verdict(S, RuledParams(args.points, args.order, args.seed, jobs=args.jobs))
    print(f"{S.name}: {v.outcome}")
    if v.note:
        print(f"  {v.note}")
    out.update(system=S.name, **v.to_json())
    return 1 if v.outcome.startswith("NOT_") else 0


def cmd_check_obstruction(args, src, out):
    S = _get(src.systems, args.left, "system")
    Sp = _get(src.systems, args.right, "system")
    o = static_obstruction(S, Sp, args.samples, args.seed, jobs=args.jobs)
    print(f"{S.name} vs {Sp.name}: {o.status}" + (f" ({o.reason})" if o.reason else ""))
    out.update(left=S.name, right=Sp.name, **o.to_json())
    return 1 if o.disproved else 0


def _parse_controls(specs, S) -> dict:
    ctrl = {}
    for spec in specs or []:
        name, sep, coeffs = spec.partition("=")
        if not sep or name.strip() not in S.x_II:
            raise UsageError(f"--controls expects NAME=c0,c1,... with NAME in {', '.join(S.x_II)}")
        ctrl[name.strip()] = _floats(coeffs)
    for s in S.x_II:
        ctrl.setdefault(s, [0.0])
    return ctrl


def cmd_simulate(args, src, out):
    S = _get(src.systems, args.system, "system")
    C = _get(src.certificates, args.cert, "certificate") if args.cert else None
    if C is not None and C.source != S:
        raise UsageError(f"certificate {C.name} starts from {C.source.name}, not {S.name}")
    ctrl = _parse_controls(args.controls, S)
    tspan = _floats(args.tspan)
    if len(tspan) != 2:
        raise UsageError("--tspan expects T0,T1")
    order = 1
    if C is not None:
        need = max((v.order for c in C.backward.components for v in c.variables()), default=0)
        order = max(C.forward.order + max(need, 1), 1)
    try:
        traj = integrate(S, _floats(args.x0), ctrl, tuple(tspan), args.h, order)
    except (DomainViolated, StepUnstable) as exc:
        print(f"FAIL: {exc}")
        out.update(system=S.name, passed=False, error=str(exc), t=exc.t)
        return 1
    if args.csv:
        traj.to_csv(args.csv)
    final = {s: float(traj.jets[v][-1]) for s, v in ((v.name, v) for v in S.base_vars)}
    print(f"integrated {len(traj) - 1} steps of h={args.h}; final state "
          + ", ".join(f"{k}={x:.12g}" for k, x in final.items()))
    out.update(system=S.name, steps=len(traj) - 1, h=args.h, final_state=final, passed=True)
    if C is None:
        return 0
    try:
        rep = validate_certificate_numeric(C, traj, args.tol)
    except SingularLocusHit as exc:
        print(f"FAIL: {exc}")
        out.update(certificate=C.name, passed=False, error=str(exc), t=exc.t)
        return 1
    for k, v in rep.to_json().items():
        if k not in ("passed", "h", "tol", "samples"):
            print(f"  {k}: {v:.3e}")
    print("PASS" if rep.passed else "FAIL")
    out.update(certificate=C.name, numeric=rep.to_json(), passed=rep.passed)
    return 0 if rep.passed else 1


# parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jetcheck", description="Checks for dynamic equivalence of control systems.")
    p.add_argument("--version", action="version", version=f"jetcheck {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help=".jet definition file")
    common.add_argument("--report", metavar="PATH", help="write a JSON report")
    common.add_argument("--timings", action="store_true", help="include wall times in the report")

    sampled = argparse.ArgumentParser(add_help=False)
    sampled.add_argument("--seed", type=int, default=0)
    sampled.add_argument("--jobs", type=int, default=None,
                         help="worker processes (default: $JETCHECK_JOBS or CPU count)")

    ruled = argparse.ArgumentParser(add_help=False)
    ruled.add_argument("--points", type=int, default=100, help="sample points per system")
    ruled.add_argument("--order", type=int, default=None, help="contact order to reach (default n+1)")

    def add(name, fn, parents, help):
        sp = sub.add_parser(name, parents=parents, help=help)
        sp.set_defaults(fn=fn)
        return sp

    add("validate", cmd_validate, [common], "parse and check well-formedness")
    sp = add("prolong", cmd_prolong, [common], "print prolonged equations")
    sp.add_argument("--system", required=True)
    sp.add_argument("--order", type=int, required=True)
    sp = add("reduce", cmd_reduce, [common], "rewrite an expression in reduced coordinates")
    sp.add_argument("--system", required=True)
    sp.add_argument("--expr", required=True)
    sp = add("check-cert", cmd_check_cert, [common, sampled], "verify a certificate")
    sp.add_argument("--cert", required=True)
    sp.add_argument("--samples", type=int, default=100, help="domain samples (0 skips)")
    sp = add("check-static", cmd_check_static, [common, sampled], "verify a static certificate")
    sp.add_argument("--cert", required=True)
    sp.add_argument("--samples", type=int, default=30, help="Jacobian samples")
    sp = add("obstruction", cmd_check_obstruction, [common, sampled], "look for a static-equivalence obstruction")
    sp.add_argument("--left", required=True)
    sp.add_argument("--right", required=True)
    sp.add_argument("--samples", type=int, default=30)
    sp = add("ruled", cmd_ruled, [common, sampled, ruled], "sampled ruledness test")
    sp.add_argument("--system", required=True)
    sp = add("verdict", cmd_verdict, [common, sampled, ruled], "non-equivalence verdict")
    sp.add_argument("--left", required=True)
    sp.add_argument("--right", required=True)
    sp = add("flatness", cmd_flatness, [common, sampled, ruled], "non-flatness verdict")
    sp.add_argument("--system", required=True)
    sp = add("simulate", cmd_simulate, [common], "integrate and optionally validate a certificate")
    sp.add_argument("--system", required=True)
    sp.add_argument("--x0", required=True, help="initial x_I (or all states), comma-separated")
    sp.add_argument("--controls", action="append", metavar="NAME=c0,c1,...",
                    help="ascending polynomial coefficients of a control state; repeatable")
    sp.add_argument("--h", type=float, default=1e-3)
    sp.add_argument("--tspan", default="0,1")
    sp.add_argument("--cert")
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--csv", metavar="PATH", help="export the trajectory")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if hasattr(args, "jobs"):
            args.jobs = _jobs(args.jobs)
        src, digest = _load(args.file)
        report = {
            "command": args.command,
            "inputs": {k: v for k, v in sorted(vars(args).items())
                       if k not in ("fn", "report", "timings", "command", "jobs")},
        }
        report["inputs"]["sha256"] = digest
        t0 = time.perf_counter()
        code = args.fn(args, src, report)
        if args.timings:
            report["timings"] = {"total_seconds": time.perf_counter() - t0}
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (KeyError, ValueError, InvalidSystem, InvalidMap, RegionExhausted) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report["exit_code"] = code
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
    return code


def _json_default(x):
    if isinstance(x, (Fraction, Expr)):
        return str(x)
    if hasattr(x, "item"):
        return x.item()
    raise TypeError(f"not serializable: {type(x).__name__}")


if __name__ == "__main__":
    sys.exit(main())
