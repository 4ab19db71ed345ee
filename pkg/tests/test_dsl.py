import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jetcheck import library
from jetcheck.dsl import ParseError, SourceFile, parse, parse_expr, parse_file, serialize, tokenize
from jetcheck.equiv import Certificate, JetMap
from jetcheck.expr import JetVar, Var, is_zero
from jetcheck.system import Constraint, ExplicitSystem

from .strategies import expressions, polynomials

J = JetVar

SIGMA_P = """
system SigmaP {
  states: y1, y2, y3;
  controls: y2, y3;
  equations:
    D(y1) = y2 + (D(y2) - y1 * D(y3)) * D(y3);
}
"""


class TestParse:
    def test_system(self):
        S = parse(SIGMA_P).system("SigmaP")
        assert (S.n, S.m) == (3, 2)
        assert is_zero(S.f[0] - (Var("y2") + (Var("y2", 1) - Var("y1") * Var("y3", 1)) * Var("y3", 1)))

    def test_trivial_system(self):
        S = parse("system T { states: a, b; controls: a, b; }").system("T")
        assert S.is_trivial() and S.f == ()

    def test_equation_order_follows_states(self):
        S = parse("""system S { states: a, b, c; controls: c;
            equations: D(b) = a; D(a) = c; }""").system("S")
        assert S.x_I == ("a", "b")
        assert str(S.f[0]) == "c" and str(S.f[1]) == "a"

    def test_derivative_notations(self):
        e = parse_expr("D(x) + D2(x) + D(x, 3) + D3(x)", ["x"])
        assert e.variables() == {J("x", 1), J("x", 2), J("x", 3)}

    def test_constraint_forms(self):
        S = parse("""system S { states: a, b; controls: b; equations: D(a) = b;
            domain: a != 1, b > 0, a < 2; }""").system("S")
        kinds = [c.kind for c in S.domain]
        assert kinds == ["!=", ">", ">"]

    def test_library_files_parse(self):
        for name in library.names():
            f = parse_file(library.path(name))
            assert f.order

    def test_lookup_error_lists_known(self, exx1):
        with pytest.raises(KeyError, match="known: "):
            exx1.system("Nope")

    def test_empty_file(self):
        assert parse("") == SourceFile()
        assert serialize(SourceFile()) == ""


def _error(text) -> ParseError:
    with pytest.raises(ParseError) as err:
        parse(text)
    return err.value


class TestDiagnostics:
    def test_end_of_input(self):
        text = "system S { states: x1, x2; controls: x2; equations: D(x1) = x2 +"
        e = _error(text)
        assert e.kind == "syntax" and "end of input" in e.message
        assert e.span == (len(text), len(text))

    def test_fractional_exponent(self):
        e = _error("system S { states: a, b; controls: b; equations: D(a) = b^0.5; }")
        assert e.kind == "fractional exponent"

    def test_unknown_identifier(self):
        e = _error("system S { states: a, b; controls: b; equations: D(a) = q; }")
        assert e.kind == "unknown identifier" and "q" in e.message

    def test_explicit_form_enforced(self):
        e = _error("system S { states: a, b; controls: b; equations: D(a) = D(a); }")
        assert e.kind == "semantic"
        e = _error("system S { states: a, b; controls: b; equations: D2(a) = b; }")
        assert e.kind == "arity" and "D2(a)" in e.message

    def test_missing_equation(self):
        e = _error("system S { states: a, b, c; controls: c; equations: D(a) = b; }")
        assert "D(b)" in e.message or "b" in e.message

    def test_division_by_zero(self):
        e = _error("system S { states: a, b; controls: b; equations: D(a) = b / (a - a); }")
        assert "zero" in e.message

    def test_lexical(self):
        e = _error("system S { states: a $ }")
        assert e.kind == "lexical" and e.line == 1 and e.column == 22

    def test_unknown_system_in_map(self):
        e = _error("map M : A -> B order 0 { }")
        assert "A" in e.message

    def test_garbage(self):
        e = _error("this is not a jet file")
        assert e.expected

    def test_line_and_column(self):
        e = _error("system S {\n  states: a, b;\n  controls: b;\n  equations:\n    D(a) = ;\n}")
        assert (e.line, e.column) == (5, 12)
        assert str(e).startswith("5:12: syntax error")

    @settings(max_examples=200, deadline=None)
    @given(st.text(alphabet="system{}:;,=+-*/^()D0123456789abx -><!#\n", max_size=60))
    def test_spans_lie_within_text(self, text):
        try:
            parse(text)
        except ParseError as e:
            lo, hi = e.span
            assert 0 <= lo <= hi <= len(text)


class TestRoundTrip:
    def test_library_round_trips(self):
        for name in library.names():
            f = parse_file(library.path(name))
            assert parse(serialize(f)) == f

    def test_tokenizer(self):
        kinds = [t.kind for t in tokenize("D(x') -> 2.5 # c\n")]
        assert kinds == ["NAME", "(", "NAME", ")", "->", "NUMBER", "EOF"]


STATES = ("x1", "x2", "x3")
SYS_POOL = tuple(J(s) for s in STATES) + (J("x2", 1), J("x3", 1))
DOM_POOL = SYS_POOL + (J("x1", 1),)
MAP_POOL = SYS_POOL + (J("x2", 2), J("x3", 2))
nonzero = lambda e: not e.rational().is_zero()


@st.composite
def source_files(draw):
    f = draw(expressions(SYS_POOL))
    dom = draw(st.lists(
        st.tuples(expressions(DOM_POOL).filter(nonzero), st.sampled_from(["!=", ">"])), max_size=2,
    ))
    S = ExplicitSystem("S", STATES, ("x2", "x3"), (f,), tuple(Constraint(e, k) for e, k in dom))
    T = ExplicitSystem("T", ("z1", "z2"), ("z1", "z2"))
    comps = (draw(expressions(MAP_POOL)), draw(polynomials(MAP_POOL)))
    phi = JetMap("Phi", S, T, 2, comps)
    psi = JetMap("Psi", T, S, 1, (Var("z1"), Var("z1", 1), Var("z2")))
    out = SourceFile()
    for kind, table, item in (("system", out.systems, S), ("system", out.systems, T),
                              ("map", out.maps, phi), ("map", out.maps, psi)):
        table[item.name] = item
        out.order.append((kind, item.name))
    if draw(st.booleans()):
        out.certificates["C"] = Certificate("C", phi, psi)
        out.order.append(("certificate", "C"))
    return out


@settings(max_examples=200, deadline=None)
@given(source_files())
def test_parse_serialize_round_trip(f):
    text = serialize(f)
    assert parse(text) == f
    assert serialize(parse(text)) == text
