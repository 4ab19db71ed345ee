"""Reader and writer for ``.jet`` definition files.

A file is a sequence of declarations::

    # comments run to the end of the line
    system Sigma {
      states: x1, x2, x3;
      controls: x2, x3;
      equations:
        D(x1) = x2;
      domain: x3 != 0, x2 + 1 > 0;
    }
    map Phi : Sigma -> Other order 1 { z1 = x1 / x3; z2 = D(x2); domain: x3 != 0; }
    certificate C { forward: Phi; backward: Psi; }

Expressions use ``+ - * / ^`` with integer exponents and the derivative
notation ``D(x)``, ``D2(x)`` or ``D(x, k)``. Parsing keeps the written tree
shape, so ``parse(serialize(f)) == f``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

from .equiv import Certificate, InvalidMap, JetMap
from .expr import Const, DivisionByZeroExpression, Expr, JetVar, Var, div, neg
from .expr.tree import Add, Mul, Pow, to_source
from .system import Constraint, ExplicitSystem, InvalidSystem

KEYWORDS = frozenset({
    "system", "map", "certificate", "states", "controls", "equations",
    "domain", "order", "forward", "backward",
})
_DERIV = re.compile(r"D(\d*)$")


class ParseError(ValueError):
    """A diagnostic with its position in the input.

    ``kind`` is one of ``lexical``, ``syntax``, ``unknown identifier``,
    ``arity``, ``fractional exponent`` or ``semantic``.
    """

    def __init__(self, message: str, text: str, start: int, end: int | None = None,
                 expected=(), kind: str = "syntax"):
        self.message = message
        self.kind = kind
        self.span = (start, start if end is None else end)
        self.line = text.count("\n", 0, start) + 1
        self.column = start - (text.rfind("\n", 0, start) + 1) + 1
        self.expected = frozenset(expected)
        super().__init__(str(self))

    def __str__(self) -> str:
        out = f"{self.line}:{self.column}: {self.kind} error: {self.message}"
        if self.expected:
            out += f" (expected {', '.join(sorted(self.expected))})"
        return out


class Token(NamedTuple):
    kind: str  # NAME, NUMBER, EOF, or the punctuation itself
    text: str
    start: int
    end: int


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<NUMBER>\d+(?:\.\d+)?)
  | (?P<NAME>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<punct>->|!=|[{}():;,=+\-*/^<>])
""", re.VERBOSE)


def tokenize(text: str) -> list:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos, pos + 1, kind="lexical")
        kind = m.lastgroup
        if kind != "ws":
            tok = m.group()
            out.append(Token(tok if kind == "punct" else kind, tok, m.start(), m.end()))
        pos = m.end()
    out.append(Token("EOF", "", len(text), len(text)))
    return out


@dataclass
class SourceFile:
    """Declarations of one file, by name, plus their order and spans."""

    systems: dict = field(default_factory=dict)
    maps: dict = field(default_factory=dict)
    certificates: dict = field(default_factory=dict)
    order: list = field(default_factory=list)  # [(kind, name), ...]
    spans: dict = field(default_factory=dict, compare=False)  # name -> (start, end)

    def system(self, name: str) -> ExplicitSystem:
        return _lookup(self.systems, name, "system")

    def map(self, name: str) -> JetMap:
        return _lookup(self.maps, name, "map")

    def certificate(self, name: str) -> Certificate:
        return _lookup(self.certificates, name, "certificate")


def _lookup(table: dict, name: str, what: str):
    try:
        return table[name]
    except KeyError:
        known = ", ".join(sorted(table)) or "none"
        raise KeyError(f"no {what} named {name!r} (known: {known})") from None


# parser -------------------------------------------------------------------


_EXPR_START = {"NAME", "NUMBER", "(", "-"}


class _Scope:
    """Which jet variables an expression may mention, and why not otherwise."""

    def __init__(self, states, check):
        self.states = set(states)
        self.check = check  # JetVar -> error message or None


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    # token helpers ----------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, message, tok=None, expected=(), kind="syntax"):
        tok = tok or self.tok
        return ParseError(message, self.text, tok.start, tok.end, expected, kind)

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def at_keyword(self, word: str) -> bool:
        return self.at("NAME", word)

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, kind: str) -> Token:
        if self.tok.kind != kind:
            found = "end of input" if self.tok.kind == "EOF" else repr(self.tok.text)
            raise self.error(f"unexpected {found}", expected={kind})
        return self.advance()

    def keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            found = "end of input" if self.tok.kind == "EOF" else repr(self.tok.text)
            raise self.error(f"unexpected {found}", expected={word})
        return self.advance()

    def name(self, what: str = "name") -> Token:
        t = self.tok
        if t.kind != "NAME":
            found = "end of input" if t.kind == "EOF" else repr(t.text)
            raise self.error(f"unexpected {found}", expected={what})
        if t.text in KEYWORDS or _DERIV.match(t.text):
            raise self.error(f"{t.text!r} is reserved", expected={what})
        return self.advance()

    def integer(self) -> int:
        t = self.expect("NUMBER")
        if "." in t.text:
            raise self.error("expected an integer", t)
        return int(t.text)

    # file -------------------------------------------------------------
    def parse_file(self) -> SourceFile:
        out = SourceFile()
        seen = {}
        while not self.at("EOF"):
            start = self.tok
            if self.at_keyword("system"):
                name, value, table, kind = *self.system(out), out.systems, "system"
            elif self.at_keyword("map"):
                name, value, table, kind = *self.map(out), out.maps, "map"
            elif self.at_keyword("certificate"):
                name, value, table, kind = *self.certificate(out), out.certificates, "certificate"
            else:
                raise self.error(f"unexpected {start.text!r}", expected={"system", "map", "certificate"})
            if name.text in seen:
                raise self.error(f"{name.text!r} is already declared", name, kind="semantic")
            seen[name.text] = kind
            table[name.text] = value
            out.order.append((kind, name.text))
            out.spans[name.text] = (start.start, self.toks[self.i - 1].end)
        return out

    def name_list(self) -> list:
        out = []
        if self.at("NAME") and not self.at(";"):
            out.append(self.name("state name"))
            while self.at(","):
                self.advance()
                out.append(self.name("state name"))
        self.expect(";")
        return out

    def system(self, out: SourceFile):
        kw = self.keyword("system")
        name = self.name("system name")
        self.expect("{")
        self.keyword("states")
        self.expect(":")
        states = self.name_list()
        names = [t.text for t in states]
        for k, t in enumerate(states):
            if t.text in names[:k]:
                raise self.error(f"duplicate state {t.text!r}", t, kind="semantic")
        controls = []
        if self.at_keyword("controls"):
            self.advance()
            self.expect(":")
            controls = self.name_list()
            for t in controls:
                if t.text not in names:
                    raise self.error(f"control {t.text!r} is not a state", t, kind="unknown identifier")
        ctrl = [t.text for t in controls]
        x_I = [s for s in names if s not in ctrl]

        def rhs_check(v: JetVar):
            if v.order == 0:
                return None
            if v.name in x_I:
                return f"{v} is a derivative of an x_I state; equations must be explicit"
            if v.order > 1:
                return f"{v}: only first derivatives of controls may appear in equations"
            return None

        eqs = {}
        if self.at_keyword("equations"):
            self.advance()
            self.expect(":")
            while self.at("NAME") and _DERIV.match(self.tok.text):
                lhs_tok = self.tok
                lhs = self.derivative(_Scope(names, lambda v: None))
                if lhs.order != 1 or lhs.name not in x_I:
                    raise self.error(
                        f"left-hand side must be D(x) for a non-control state, got {lhs}",
                        lhs_tok, kind="arity")
                if lhs.name in eqs:
                    raise self.error(f"second equation for D({lhs.name})", lhs_tok, kind="arity")
                self.expect("=")
                eqs[lhs.name] = self.expr(_Scope(names, rhs_check))
                self.expect(";")
        missing = [s for s in x_I if s not in eqs]
        domain = []
        if self.at_keyword("domain"):
            domain = self.domain(_Scope(names, lambda v: None if v.order <= 1 else f"{v}: domains use first jets only"))
        if missing:
            raise self.error(f"missing equations for {', '.join(f'D({s})' for s in missing)}",
                             kw, kind="arity")
        self.expect("}")
        try:
            S = ExplicitSystem(name.text, tuple(names), tuple(ctrl), tuple(eqs[s] for s in x_I), tuple(domain))
        except InvalidSystem as exc:
            raise self.error(str(exc), name, kind="semantic") from None
        return name, S

    def domain(self, scope) -> list:
        self.keyword("domain")
        self.expect(":")
        out = []
        if self.at(";"):
            self.advance()
            return out
        out.append(self.constraint(scope))
        while self.at(","):
            self.advance()
            out.append(self.constraint(scope))
        self.expect(";")
        return out

    def constraint(self, scope) -> Constraint:
        lhs = self.expr(scope)
        op = self.tok
        if op.kind not in ("!=", ">", "<"):
            raise self.error("expected a comparison", expected={"!=", ">", "<"})
        self.advance()
        rhs = self.expr(scope)
        if op.kind == "<":
            lhs, rhs = rhs, lhs
        if not (isinstance(rhs, Const) and rhs.value == 0):
            lhs = Add(*(lhs.args if isinstance(lhs, Add) else (lhs,)), neg(rhs))
        return Constraint(lhs, ">" if op.kind in (">", "<") else "!=")

    def map(self, out: SourceFile):
        self.keyword("map")
        name = self.name("map name")
        self.expect(":")
        src_tok = self.name("system name")
        self.expect("->")
        dst_tok = self.name("system name")
        for t in (src_tok, dst_tok):
            if t.text not in out.systems:
                raise self.error(f"unknown system {t.text!r}", t, kind="unknown identifier")
        src, dst = out.systems[src_tok.text], out.systems[dst_tok.text]
        self.keyword("order")
        K = self.integer()
        self.expect("{")
        x_I = set(src.x_I)

        def check(v: JetVar):
            if v.order == 0:
                return None
            if v.name in x_I:
                return f"{v}: maps use reduced coordinates, so derivatives of x_I states are not allowed"
            if v.order > K:
                return f"{v} exceeds the declared order {K}"
            return None

        scope = _Scope(src.states, check)
        comps = {}
        domain = []
        while self.at("NAME") and not self.at_keyword("domain"):
            t = self.name("target state")
            if t.text not in dst.states:
                raise self.error(f"{t.text!r} is not a state of {dst.name}", t, kind="unknown identifier")
            if t.text in comps:
                raise self.error(f"second component for {t.text!r}", t, kind="arity")
            self.expect("=")
            comps[t.text] = self.expr(scope)
            self.expect(";")
        if self.at_keyword("domain"):
            domain = self.domain(scope)
        missing = [z for z in dst.states if z not in comps]
        if missing:
            raise self.error(f"missing components for {', '.join(missing)}", name, kind="arity")
        self.expect("}")
        try:
            phi = JetMap(name.text, src, dst, K, tuple(comps[z] for z in dst.states), tuple(domain))
        except InvalidMap as exc:
            raise self.error(str(exc), name, kind="semantic") from None
        return name, phi

    def certificate(self, out: SourceFile):
        self.keyword("certificate")
        name = self.name("certificate name")
        self.expect("{")
        maps = []
        for role in ("forward", "backward"):
            self.keyword(role)
            self.expect(":")
            t = self.name("map name")
            if t.text not in out.maps:
                raise self.error(f"unknown map {t.text!r}", t, kind="unknown identifier")
            maps.append(out.maps[t.text])
            self.expect(";")
        self.expect("}")
        try:
            C = Certificate(name.text, *maps)
        except InvalidMap as exc:
            raise self.error(str(exc), name, kind="semantic") from None
        return name, C

    # expressions --------------------------------------------------------
    def expr(self, scope) -> Expr:
        start = self.tok
        e = self.sum(scope)
        try:
            e.rational()
        except DivisionByZeroExpression as exc:
            end = self.toks[self.i - 1].end
            raise ParseError(str(exc), self.text, start.start, end, kind="semantic") from None
        return e

    def sum(self, scope) -> Expr:
        terms = [self.term(scope)]
        while self.at("+") or self.at("-"):
            op = self.advance()
            t = self.term(scope)
            terms.append(t if op.kind == "+" else neg(t))
        return terms[0] if len(terms) == 1 else Add(*terms)

    def term(self, scope) -> Expr:
        chain = [self.unary(scope)]
        while self.at("*") or self.at("/"):
            op = self.advance()
            f = self.unary(scope)
            if op.kind == "*":
                chain.append(f)
            else:
                left = chain[0] if len(chain) == 1 else Mul(*chain)
                chain = [div(left, f)]
        return chain[0] if len(chain) == 1 else Mul(*chain)

    def unary(self, scope) -> Expr:
        if self.at("-"):
            self.advance()
            return neg(self.unary(scope))
        return self.power(scope)

    def power(self, scope) -> Expr:
        base = self.primary(scope)
        if not self.at("^"):
            return base
        self.advance()
        sign = 1
        if self.at("-"):
            self.advance()
            sign = -1
        t = self.tok
        if t.kind == "NUMBER" and "." in t.text:
            raise self.error("fractional exponent; exponents must be integers", t, kind="fractional exponent")
        if t.kind == "(":
            raise self.error("exponents must be integer literals", t, expected={"NUMBER"},
                             kind="fractional exponent")
        exp = sign * self.integer()
        if self.at("/"):
            raise self.error("fractional exponent; exponents must be integers", kind="fractional exponent")
        if self.at("^"):
            raise self.error("chained powers need parentheses", expected={"(", ";"})
        return Pow(base, exp)

    def primary(self, scope) -> Expr:
        t = self.tok
        if t.kind == "NUMBER":
            self.advance()
            return Const(Fraction(t.text))
        if t.kind == "(":
            self.advance()
            e = self.sum(scope)
            self.expect(")")
            return e
        if t.kind == "NAME":
            if _DERIV.match(t.text) and self.toks[self.i + 1].kind == "(":
                return Var(self.derivative(scope))
            if t.text in KEYWORDS:
                raise self.error(f"{t.text!r} is reserved", expected=_EXPR_START)
            self.advance()
            return Var(self.resolve(scope, JetVar(t.text, 0), t))
        found = "end of input" if t.kind == "EOF" else repr(t.text)
        raise self.error(f"unexpected {found}", expected=_EXPR_START)

    def derivative(self, scope) -> JetVar:
        head = self.advance()
        m = _DERIV.match(head.text)
        if m is None:
            raise self.error("expected a derivative D(x)", head, expected={"D"})
        k = int(m.group(1)) if m.group(1) else 1
        self.expect("(")
        t = self.name("state name")
        if self.at(","):
            if m.group(1):
                raise self.error("write D(x, k) or Dk(x), not both", head)
            self.advance()
            k = self.integer()
        self.expect(")")
        if k < 1:
            raise self.error("derivative order must be at least 1", head, kind="semantic")
        v = JetVar(t.text, k)
        return self.resolve(scope, v, t, head)

    def resolve(self, scope, v: JetVar, tok: Token, head: Token | None = None) -> JetVar:
        if v.name not in scope.states:
            raise self.error(f"unknown identifier {v.name!r}", tok, kind="unknown identifier")
        msg = scope.check(v)
        if msg:
            start = head or tok
            raise ParseError(msg, self.text, start.start, self.toks[self.i - 1].end, kind="semantic")
        return v


def parse(text: str) -> SourceFile:
    return _Parser(text).parse_file()


def parse_file(path) -> SourceFile:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def parse_expr(text: str, states, check=None) -> Expr:
    """A single expression over ``states`` (all jet orders allowed by default)."""
    p = _Parser(text)
    e = p.expr(_Scope(states, check or (lambda v: None)))
    if not p.at("EOF"):
        raise p.error(f"unexpected {p.tok.text!r}", expected={"+", "-", "*", "/", "^"})
    return e


# writer -------------------------------------------------------------------


def _constraints(cs) -> str:
    return ", ".join(f"{to_source(c.expr)} {c.kind} 0" for c in cs)


def _system_source(S: ExplicitSystem) -> str:
    lines = [f"system {S.name} {{", f"  states: {', '.join(S.states)};"]
    lines.append(f"  controls: {', '.join(S.controls)};")
    if S.f:
        lines.append("  equations:")
        lines += [f"    D({s}) = {to_source(e)};" for s, e in zip(S.x_I, S.f)]
    if S.domain:
        lines.append(f"  domain: {_constraints(S.domain)};")
    lines.append("}")
    return "\n".join(lines)


def _map_source(phi: JetMap) -> str:
    lines = [f"map {phi.name} : {phi.source.name} -> {phi.target.name} order {phi.order} {{"]
    lines += [f"  {z} = {to_source(c)};" for z, c in zip(phi.target.states, phi.components)]
    if phi.domain:
        lines.append(f"  domain: {_constraints(phi.domain)};")
    lines.append("}")
    return "\n".join(lines)


def _certificate_source(C: Certificate) -> str:
    return f"certificate {C.name} {{\n  forward: {C.forward.name};\n  backward: {C.backward.name};\n}}"


def serialize(f: SourceFile) -> str:
    blocks = []
    for kind, name in f.order:
        if kind == "system":
            blocks.append(_system_source(f.systems[name]))
        elif kind == "map":
            blocks.append(_map_source(f.maps[name]))
        else:
            blocks.append(_certificate_source(f.certificates[name]))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


__all__ = ["KEYWORDS", "ParseError", "SourceFile", "parse", "parse_expr", "parse_file", "serialize", "tokenize"]
