from fractions import Fraction

import pytest

from jetcheck.equiv import (
    Certificate, InvalidMap, JetMap, ZeroDirection, check_certificate, check_domains,
    check_maps_into, check_roundtrip, effective_order, extract_ruling, sample_source_point,
)
from jetcheck.expr import Var
from jetcheck.ruled import INFINITE, contact_order
from jetcheck.system import Constraint


def identity_map(name, S, T):
    return JetMap(name, S, T, 0, tuple(Var(s) for s in S.states))


class TestExactChecks:
    def test_dynamic_equivalence_certificate(self, exx1):
        report = check_certificate(exx1.certificate("C1"))
        assert report.passed
        assert len(report.checks) == 4
        assert all(c.kind == "exact" and not c.residuals for c in report.checks)

    def test_flat_output_into_trivial_system(self, exx1):
        report = check_maps_into(exx1.map("FlatOut"))
        assert report.passed
        assert report.checks[0].note == "target has no equations"

    def test_identity_into_a_different_system_fails(self, exx1, exx2):
        phi = identity_map("Id", exx1.system("Sigma"), exx2.system("SigmaP"))
        report = check_maps_into(phi)
        assert not report.passed
        assert report.checks[0].residuals

    def test_identity_certificate(self, exx2):
        S = exx2.system("Sigma")
        C = Certificate("I", identity_map("a", S, S), identity_map("b", S, S))
        assert check_certificate(C).passed

    def test_integrators_and_flatness(self, exx1):
        assert check_certificate(exx1.certificate("Integrators")).passed
        assert check_certificate(exx1.certificate("Flat")).passed

    def test_roundtrip_symmetric_under_swap(self, exx1):
        C = exx1.certificate("C1")
        swapped = Certificate("swap", C.backward, C.forward)
        assert [c.passed for c in check_roundtrip(C).checks] == [c.passed for c in reversed(check_roundtrip(swapped).checks)]

    def test_broken_certificate_reports_residuals(self, exx1):
        C = exx1.certificate("Flat")
        bad_in = JetMap("BadIn", C.target, C.source, 1, (Var("z1"), Var("z1", 1), Var("z1")))
        report = check_roundtrip(Certificate("bad", C.forward, bad_in))
        assert not report.passed
        assert any(c.residuals for c in report.checks)

    def test_unpaired_maps_rejected(self, exx1):
        with pytest.raises(InvalidMap):
            Certificate("x", exx1.map("Phi"), exx1.map("FlatIn"))

    def test_map_outside_reduced_coordinates(self, exx1):
        S, T = exx1.system("Sigma"), exx1.system("Trivial")
        with pytest.raises(InvalidMap):
            JetMap("bad", S, T, 1, (Var("x1", 1), Var("x3")))
        with pytest.raises(InvalidMap):
            JetMap("bad", S, T, 0, (Var("x2", 1), Var("x3")))
        with pytest.raises(InvalidMap):
            JetMap("bad", S, T, 0, (Var("x1"),))


class TestDomains:
    def test_example_domains_hold(self, exx1):
        report = check_domains(exx1.certificate("C1"), samples=100)
        assert report.passed
        assert all(c.kind == "statistical" for c in report.checks)

    def test_excluding_domain_fails(self, exx1):
        C = exx1.certificate("Flat")
        S = C.source
        excl = JetMap(
            "Excl", S, C.target, 0, C.forward.components,
            (Constraint(Var("x1") - Var("x1") - 1, ">"),),
        )
        # the backward map now lands outside the forward map's domain
        report = check_domains(Certificate("E", excl, C.backward), samples=10)
        assert not report.passed
        assert report.checks[1].witnesses

    def test_trivial_target_vacuous(self, exx1):
        report = check_domains(exx1.certificate("Flat"), samples=10)
        assert report.checks[0].note == "no constraints on the image"


class TestOrders:
    def test_effective_orders(self, exx1):
        assert effective_order(exx1.map("Psi")) == 1
        assert exx1.map("Psi").order == 2
        assert effective_order(exx1.map("Phi")) == 1
        assert effective_order(exx1.map("FlatOut")) == 0


class TestRulingExtraction:
    def test_induced_line_has_infinite_contact(self, exx1):
        phi = exx1.map("Phi")
        for seed in range(5):
            p = sample_source_point(phi, seed)
            line = extract_ruling(phi, p, (1, 0))
            report = contact_order(phi.target, line.point(), line.direction)
            assert report.achieved_order == INFINITE

    def test_order_zero_map_has_no_line(self, exx1):
        phi = exx1.map("FlatOut")
        with pytest.raises(ValueError):
            extract_ruling(phi, sample_source_point(phi, 0, order=1), (1, 0))

    def test_kernel_direction(self, exx1):
        S, T = exx1.system("Sigma"), exx1.system("Trivial")
        phi = JetMap("K", S, T, 1, (Var("x1") + Var("x3", 1), Var("x2")))
        p = sample_source_point(phi, 0)
        with pytest.raises(ZeroDirection):
            extract_ruling(phi, p, (1, 0))
        line = extract_ruling(phi, p, (0, 1))
        assert line.direction == (Fraction(1), Fraction(0))
