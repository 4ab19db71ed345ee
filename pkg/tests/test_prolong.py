from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jetcheck.equiv import JetMap
from jetcheck.expr import Const, JetVar, Var, free_total_derivative, is_zero, lambdify
from jetcheck.numeric import fd_jet, integrate
from jetcheck.prolong import (
    is_reduced, prolong_f, prolong_map, prolong_system, reduce, reduced_coordinates,
    sys_total_derivative,
)
from jetcheck.system import ExplicitSystem, trivial_system

from .strategies import polynomials, unit_fractions

J = JetVar


def same(a, b) -> bool:
    return is_zero(a - b)


def test_first_prolongation_of_affine_example(exx1):
    S = exx1.system("Sigma")
    assert same(prolong_f(S, 0)[0], Var("x2"))
    assert same(prolong_f(S, 1)[0], Var("x2", 1))
    assert same(prolong_f(S, 2)[0], Var("x2", 2))


def test_trivial_system_has_no_prolonged_equations():
    T = trivial_system("T", ["a", "b"])
    assert prolong_f(T, 3) == []
    assert prolong_system(T, 2).equations == ()


def test_prolong_system(exx1):
    S = exx1.system("Sigma")
    P = prolong_system(S, 2)
    assert [v for v, _ in P.equations] == [J("x1", 1), J("x1", 2)]
    assert same(P.equations[1][1], Var("x2", 1))
    assert len(prolong_system(S, 1).equations) == 1
    with pytest.raises(ValueError):
        prolong_system(S, 0)


def test_order_cap(exx1):
    S = exx1.system("SigmaP")
    with pytest.raises(ValueError):
        prolong_f(S, 9)
    with pytest.raises(ValueError):
        prolong_f(S, 3, max_order=2)


def test_reduce_examples(exx1):
    S = exx1.system("Sigma")
    assert same(reduce(Var("x1", 1) * Var("x3"), S), Var("x2") * Var("x3"))
    assert same(reduce(Var("x1", 2), S), Var("x2", 1))
    e = Var("x2")
    assert reduce(e, S) is e
    assert is_reduced(reduce(Var("x1", 3) + Var("x1", 1), S), S)


def test_sys_total_derivative_examples(exx1):
    S = exx1.system("Sigma")
    assert same(sys_total_derivative(Var("x1"), S), Var("x2"))
    assert same(sys_total_derivative(Var("x2"), S), Var("x2", 1))


def test_prolong_map_matches_target_velocity(exx1):
    phi = exx1.map("Phi")
    levels = prolong_map(phi, 1)
    assert all(same(a, b) for a, b in zip(levels[0], phi.components))
    # third component is x1, whose derivative along Sigma is x2
    assert same(levels[1][2], Var("x2"))


def test_constant_map_has_zero_higher_jets(exx1):
    S, T = exx1.system("Sigma"), exx1.system("Trivial")
    phi = JetMap("K", S, T, 0, (Const(3), Const(Fraction(-1, 2))))
    for level in prolong_map(phi, 3)[1:]:
        assert all(is_zero(c) for c in level)


def test_reduced_coordinates(exx1):
    S = exx1.system("Sigma")
    assert reduced_coordinates(S, 1) == [J("x1"), J("x2"), J("x3"), J("x2", 1), J("x3", 1)]


# -- properties ---------------------------------------------------------------

PROPS = settings(max_examples=200, deadline=None)

SRC = ExplicitSystem("R", ("a", "b", "c"), ("b", "c"), (Var("b") + Var("a") * Var("c", 1) ** 2,))
TGT = trivial_system("Z", ["z1", "z2"])
POOL = tuple(reduced_coordinates(SRC, 1))
ORDER_POOL = {r: tuple(reduced_coordinates(SRC, r)) for r in range(4)}


@PROPS
@given(polynomials(pool=POOL, max_terms=3, max_exp=2))
def test_sys_derivative_is_reduced_free_derivative(e):
    assert same(sys_total_derivative(e, SRC), reduce(free_total_derivative(e), SRC))


@PROPS
@given(polynomials(pool=POOL + (J("a", 1), J("a", 2)), max_terms=3))
def test_reduce_is_idempotent(e):
    once = reduce(e, SRC)
    assert is_reduced(once, SRC)
    assert reduce(once, SRC).rational() == once.rational()


@st.composite
def random_maps(draw):
    K = draw(st.integers(0, 2))
    pool = ORDER_POOL[K]
    comps = (draw(polynomials(pool=pool, max_terms=3)), draw(polynomials(pool=pool, max_terms=3)))
    r = draw(st.integers(1, 3))
    return JetMap("M", SRC, TGT, K, comps), r


@PROPS
@given(random_maps(), st.data())
def test_projection_commutes_with_prolongation(mr, data):
    phi, r = mr
    s = data.draw(st.integers(0, r - 1))
    full = prolong_map(phi, r)
    assert [tuple(c.rational() for c in lv) for lv in full[: s + 1]] == [
        tuple(c.rational() for c in lv) for lv in prolong_map(phi, s)
    ]
    # independent route: iterate reduce(free derivative)
    for l in range(1, r + 1):
        for prev, cur in zip(full[l - 1], full[l]):
            assert same(cur, reduce(free_total_derivative(prev), SRC))


@st.composite
def random_systems(draw):
    pool = (J("a"), J("b"), J("b", 1))
    # unit-size data keeps the solution bounded on the short window
    f = draw(polynomials(pool=pool, max_terms=3, max_exp=2, coeffs=unit_fractions))
    ctrl = draw(st.lists(unit_fractions, min_size=1, max_size=4))
    x0 = draw(unit_fractions)
    i = draw(st.integers(1, 3))
    return ExplicitSystem("P", ("a", "b"), ("b",), (f,)), ctrl, x0, i


@PROPS
@given(random_systems())
def test_prolong_f_matches_finite_differences(case):
    S, ctrl, x0, i = case
    h = 1e-5
    traj = integrate(S, [x0], {"b": ctrl}, (0.0, 20 * h), h, order=i + 1)
    lower, upper = prolong_f(S, i - 1)[0], prolong_f(S, i)[0]
    def values(e):
        vs = sorted(e.variables())
        out = lambdify([e], vs)(*(traj.jets[v] for v in vs))[0]
        return np.broadcast_to(out, traj.t.shape)
    fd = fd_jet(values(lower), 1, h)[1][1:-1]
    exact = values(upper)[1:-1]
    assert np.all(np.abs(fd - exact) <= 1e-6 * np.maximum(1.0, np.abs(exact)))
