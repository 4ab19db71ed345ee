from fractions import Fraction

import pytest

from jetcheck.dsl import parse
from jetcheck.equiv import JetMap
from jetcheck.expr import JetVar, Var
from jetcheck.ruled import contact_order, find_ruling
from jetcheck.system import JetPoint, sample_fiber_point, trivial_system
from jetcheck.verdict import (
    DISPROVED, NOT_DYNAMIC_EQUIVALENT, NOT_FLAT, UNKNOWN, DimensionMismatch, RuledParams,
    StaticCertificate, check_static_certificate, flatness_verdict, is_affine_fiber,
    nonequivalence_verdict, recheck, static_obstruction,
)

FAST = RuledParams(n_points=30)

SMALL = parse("""
system Plane {
  states: a, b;
  controls: b;
  equations:
    D(a) = b * D(b)^2;
}
""")


def static_cert(f):
    return StaticCertificate("S0", f.map("Shift"), f.map("Unshift"))


class TestStaticCertificate:
    def test_linear_change_of_coordinates(self, static_file):
        f = static_file
        report = check_static_certificate(f.system("Sigma"), f.system("Shifted"), static_cert(f))
        assert report.passed
        assert [c.kind for c in report.checks].count("statistical") == 1

    def test_identity(self, exx2):
        S = exx2.system("Sigma")
        ident = JetMap("id", S, S, 0, tuple(Var(s) for s in S.states))
        assert check_static_certificate(S, S, StaticCertificate("I", ident, ident)).passed

    def test_candidate_between_exx1_systems_fails(self, exx1):
        S, Sp = exx1.system("Sigma"), exx1.system("SigmaP")
        fwd = JetMap("F", S, Sp, 0, (Var("x1"), Var("x2"), Var("x3")))
        back = JetMap("B", Sp, S, 0, (Var("y1"), Var("y2"), Var("y3")))
        report = check_static_certificate(S, Sp, StaticCertificate("X", fwd, back))
        assert not report.passed
        assert any(c.residuals for c in report.checks if not c.passed)

    def test_dimension_mismatch(self, exx1):
        S, T = exx1.system("Sigma"), exx1.system("Trivial")
        C = StaticCertificate("F", exx1.map("FlatOut"), JetMap("B", T, S, 0, (Var("z1"), Var("z2"), Var("z1"))))
        with pytest.raises(DimensionMismatch):
            check_static_certificate(S, T, C)

    def test_requires_order_zero(self, exx1):
        with pytest.raises(ValueError):
            StaticCertificate("X", exx1.map("Phi"), exx1.map("Psi"))


def test_affineness(exx1):
    assert is_affine_fiber(exx1.system("Sigma"))
    assert not is_affine_fiber(exx1.system("SigmaP"))
    assert is_affine_fiber(exx1.system("Trivial"))


class TestObstruction:
    def test_affine_versus_quadric(self, exx1):
        obs = static_obstruction(exx1.system("Sigma"), exx1.system("SigmaP"))
        assert obs.status == DISPROVED
        assert obs.reason == "affine vs non-affine fiber"

    def test_same_system(self, exx2):
        S = exx2.system("Sigma")
        assert static_obstruction(S, S).status == UNKNOWN

    def test_dimension(self, exx1):
        obs = static_obstruction(exx1.system("Trivial"), exx1.system("Sigma"))
        assert obs.disproved and obs.reason == "state dimension mismatch"

    def test_fiber_dimension(self, exx1):
        obs = static_obstruction(trivial_system("T3", ["a", "b", "c"]), exx1.system("Sigma"))
        assert obs.reason == "fiber dimension mismatch"

    def test_ruledness_differs(self, exx2):
        obs = static_obstruction(exx2.system("Sigma"), exx2.system("SigmaP"))
        assert obs.disproved and obs.reason == "ruled vs non-ruled fiber"

    def test_too_few_samples_stay_unknown(self, exx2):
        obs = static_obstruction(exx2.system("Sigma"), exx2.system("SigmaP"), samples=10)
        assert obs.status == UNKNOWN


class TestVerdicts:
    def test_power_pair_not_equivalent(self, exx2):
        systems = {"Sigma": exx2.system("Sigma"), "SigmaP": exx2.system("SigmaP")}
        v = nonequivalence_verdict(systems["Sigma"], systems["SigmaP"], FAST)
        assert v.outcome == NOT_DYNAMIC_EQUIVALENT and v.case == "n=n'"
        assert v.witness_system == "Sigma" and v.witnesses
        assert recheck(v, systems)
        assert not v.mixed

    def test_symmetric_up_to_labels(self, exx2):
        a = nonequivalence_verdict(exx2.system("Sigma"), exx2.system("SigmaP"), FAST)
        b = nonequivalence_verdict(exx2.system("SigmaP"), exx2.system("Sigma"), FAST)
        assert a.outcome == b.outcome and a.witness_system == b.witness_system

    def test_equivalent_pair_unknown(self, exx1):
        v = nonequivalence_verdict(exx1.system("Sigma"), exx1.system("SigmaP"), FAST)
        assert v.outcome == UNKNOWN
        assert v.obstruction.reason == "affine vs non-affine fiber"

    def test_same_system_unknown(self, exx2):
        S = exx2.system("Sigma")
        v = nonequivalence_verdict(S, S, FAST)
        assert v.outcome == UNKNOWN
        assert set(v.ruledness) == {"Sigma", "Sigma'"}

    def test_unequal_dimensions(self, exx2):
        big, small = exx2.system("Sigma"), SMALL.system("Plane")
        assert nonequivalence_verdict(small, big, FAST).case == "n<n'"
        v = nonequivalence_verdict(big, small, FAST)
        assert v.case == "n>n'" and v.outcome == NOT_DYNAMIC_EQUIVALENT
        assert nonequivalence_verdict(exx2.system("SigmaP"), small, FAST).outcome == UNKNOWN

    def test_flatness(self, exx1, exx2):
        v = flatness_verdict(exx2.system("Sigma"), FAST)
        assert v.outcome == NOT_FLAT and v.witnesses
        assert recheck(v, {"Sigma": exx2.system("Sigma")})
        assert flatness_verdict(exx1.system("Sigma"), FAST).outcome == UNKNOWN
        assert flatness_verdict(exx1.system("Trivial"), FAST).outcome == UNKNOWN

    def test_json_shape(self, exx2):
        out = flatness_verdict(exx2.system("Sigma"), FAST).to_json()
        assert out["outcome"] == NOT_FLAT and out["witness_system"] == "Sigma"
        assert out["ruledness"]["Sigma"]["exact_not_found"] == 30


def test_static_map_pushes_rulings_forward(static_file):
    f = static_file
    S, T, phi = f.system("Sigma"), f.system("Shifted"), f.map("Shift")
    for seed in range(10):
        p = sample_fiber_point(S, seed)
        r = find_ruling(S, p)
        vals = {}
        push = []
        for z, c in zip(T.states, phi.components):
            rf = c.rational()
            vals[JetVar(z)] = rf.evaluate(p.values)
            grads = [rf.diff(JetVar(s)).evaluate(p.values) for s in S.states]
            vals[JetVar(z, 1)] = sum(g * p[JetVar(s, 1)] for g, s in zip(grads, S.states))
            push.append(sum((g * w for g, w in zip(grads, r.direction)), Fraction(0)))
        assert contact_order(T, JetPoint(vals), push).infinite
