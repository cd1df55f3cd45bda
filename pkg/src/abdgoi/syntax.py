"""Surface language: names, types, terms, lexer, parser and pretty-printer.

The parser produces desugared terms.  ``let`` forms become applications of
abstractions (or of decouplings), so the core only has seven term shapes.
"""

from __future__ import annotations

import functools
import itertools
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional, Union


# ---------------------------------------------------------------------------
# Names

@dataclass(frozen=True, order=True)
class Name:
    """An atom indexing a vector space.  Equality is by id only."""

    id: int
    origin: str = field(default="", compare=False)

    def __str__(self) -> str:
        return f"{self.origin or 'a'}{self.id}"


class NameSupply:
    """Monotone source of fresh names."""

    def __init__(self, start: int = 0) -> None:
        self._counter = itertools.count(start)

    def fresh(self, origin: str = "a") -> Name:
        return Name(next(self._counter), origin)


GLOBAL_NAMES = NameSupply()


# ---------------------------------------------------------------------------
# Types

@dataclass(frozen=True)
class Field:
    def __str__(self) -> str:
        return "F"


@dataclass(frozen=True)
class Vec:
    name: Name

    def __str__(self) -> str:
        return f"V[{self.name}]"


@dataclass(frozen=True)
class Arrow:
    dom: "Type"
    cod: "Type"

    def __str__(self) -> str:
        d = f"({self.dom})" if isinstance(self.dom, Arrow) else str(self.dom)
        return f"{d} -> {self.cod}"


Type = Union[Field, Vec, Arrow]
FIELD = Field()


@functools.lru_cache(maxsize=None)
def type_names(t: Type) -> frozenset[Name]:
    if isinstance(t, Vec):
        return frozenset([t.name])
    if isinstance(t, Arrow):
        return type_names(t.dom) | type_names(t.cod)
    return frozenset()


def rename_type(t: Type, perm: dict[Name, Name]) -> Type:
    if isinstance(t, Vec):
        return Vec(perm.get(t.name, t.name))
    if isinstance(t, Arrow):
        return Arrow(rename_type(t.dom, perm), rename_type(t.cod, perm))
    return t


def is_ground(t: Type) -> bool:
    return not isinstance(t, Arrow)


# ---------------------------------------------------------------------------
# Primitive operations

class Op(Enum):
    ADD = "+"
    SUB = "-"
    MUL = "*"
    DIV = "/"
    VADD = "+v"
    SMUL = "*v"
    DOT = "."
    VSUM = "vsum"
    VSCALE = "vscale"


FIELD_OPS = frozenset({Op.ADD, Op.SUB, Op.MUL, Op.DIV})
VECTOR_OPS = frozenset({Op.VADD, Op.SMUL, Op.DOT})
ITER_OPS = frozenset({Op.VSUM, Op.VSCALE})


@dataclass(frozen=True)
class OpKind:
    """A resolved primitive.  Vector primitives carry the name of their space."""

    op: Op
    name: Optional[Name] = None

    @property
    def iterated(self) -> bool:
        return self.op in ITER_OPS

    def signature(self) -> tuple[Type, Type, Type]:
        if self.op in FIELD_OPS:
            return FIELD, FIELD, FIELD
        assert self.name is not None
        v = Vec(self.name)
        return {
            Op.VADD: (v, v, v),
            Op.SMUL: (FIELD, v, v),
            Op.DOT: (v, v, FIELD),
            Op.VSUM: (Arrow(v, v), v, v),
            Op.VSCALE: (Arrow(v, FIELD), v, v),
        }[self.op]

    def renamed(self, perm: dict[Name, Name]) -> "OpKind":
        if self.name is None:
            return self
        return OpKind(self.op, perm.get(self.name, self.name))

    def __str__(self) -> str:
        return self.op.value if self.name is None else f"{self.op.value}[{self.name}]"


SURFACE_OPS = {"+", "-", "*", "/", ".", "vsum", "vscale"}


# ---------------------------------------------------------------------------
# Terms

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Abs:
    var: str
    annot: Optional[Type]
    body: "Term"


@dataclass(frozen=True)
class App:
    fun: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class PrimOp:
    """Binary primitive.  ``op`` is the surface symbol; ``kind`` is filled by typing."""

    op: str
    left: "Term"
    right: "Term"
    kind: Optional[OpKind] = None


@dataclass(frozen=True)
class Prov:
    value: float


@dataclass(frozen=True)
class Abd:
    name: Name
    f: str
    x: str
    annot: Optional[Type]
    body: "Term"


Term = Union[Var, Abs, App, Const, PrimOp, Prov, Abd]


def subterms(t: Term) -> Iterator[Term]:
    """Pre-order, left-to-right traversal."""
    yield t
    if isinstance(t, (Abs, Abd)):
        yield from subterms(t.body)
    elif isinstance(t, App):
        yield from subterms(t.fun)
        yield from subterms(t.arg)
    elif isinstance(t, PrimOp):
        yield from subterms(t.left)
        yield from subterms(t.right)


def prov_values(t: Term) -> list[float]:
    return [s.value for s in subterms(t) if isinstance(s, Prov)]


def alpha_equal(a: Term, b: Term) -> bool:
    """Structural equality up to a consistent renaming of decoupling names."""
    perm: dict[Name, Name] = {}

    def ty(x: Optional[Type], y: Optional[Type]) -> bool:
        if x is None or y is None:
            return x is y
        if isinstance(x, Vec) and isinstance(y, Vec):
            return perm.setdefault(x.name, y.name) == y.name
        if isinstance(x, Arrow) and isinstance(y, Arrow):
            return ty(x.dom, y.dom) and ty(x.cod, y.cod)
        return type(x) is type(y)

    def go(x: Term, y: Term) -> bool:
        if type(x) is not type(y):
            return False
        if isinstance(x, Var):
            return x.name == y.name
        if isinstance(x, (Const, Prov)):
            return x.value == y.value
        if isinstance(x, Abs):
            return x.var == y.var and ty(x.annot, y.annot) and go(x.body, y.body)
        if isinstance(x, App):
            return go(x.fun, y.fun) and go(x.arg, y.arg)
        if isinstance(x, PrimOp):
            if x.op != y.op or (x.kind is None) != (y.kind is None):
                return False
            if x.kind is not None:
                if x.kind.op != y.kind.op:
                    return False
                if x.kind.name is not None and perm.setdefault(x.kind.name, y.kind.name) != y.kind.name:
                    return False
            return go(x.left, y.left) and go(x.right, y.right)
        if isinstance(x, Abd):
            if perm.setdefault(x.name, y.name) != y.name:
                return False
            return x.f == y.f and x.x == y.x and ty(x.annot, y.annot) and go(x.body, y.body)
        return False

    return go(a, b)


# ---------------------------------------------------------------------------
# Lexer

class SyntaxErrorAt(Exception):
    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


KEYWORDS = {"let", "in", "fun", "abd", "vsum", "vscale", "F"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)
  | (?P<arrow>->)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9']*)
  | (?P<sym>[-+*/(){}:,=@.\\λ])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # num, ident, kw, sym, dot, eof
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise SyntaxErrorAt(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "ident" and text in KEYWORDS:
            kind = "kw"
        elif kind == "arrow":
            kind = "sym"
        elif kind == "sym" and text == ".":
            before = source[pos - 1] if pos > 0 else " "
            after = source[pos + 1] if pos + 1 < len(source) else " "
            if before.isspace() and after.isspace():
                kind = "dot"
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, text, line, col))
        for i, ch in enumerate(text):
            if ch == "\n":
                line += 1
                line_start = pos + i + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------------------
# Parser

class Parser:
    def __init__(self, source: str, names: NameSupply = GLOBAL_NAMES) -> None:
        self.toks = tokenize(source)
        self.i = 0
        self.names = names

    # token helpers
    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Optional[Token] = None) -> SyntaxErrorAt:
        tok = tok or self.peek()
        where = "end of input" if tok.kind == "eof" else repr(tok.text)
        return SyntaxErrorAt(f"{msg} at {where}", tok.line, tok.col)

    def at(self, text: str) -> bool:
        t = self.peek()
        return t.kind in ("sym", "kw") and t.text == text

    def eat(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}")
        tok = self.peek()
        self.i += 1
        return tok

    def ident(self) -> str:
        t = self.peek()
        if t.kind != "ident":
            if t.kind == "kw":
                raise self.error("reserved word used as identifier")
            raise self.error("expected identifier")
        self.i += 1
        return t.text

    # grammar
    def parse(self) -> Term:
        t = self.term()
        if self.peek().kind != "eof":
            raise self.error("unexpected token")
        return t

    def term(self) -> Term:
        if self.at("let"):
            return self.let()
        if self.at("fun"):
            return self.fun()
        if self.at("\\") or self.at("λ"):
            return self.lam()
        if self.at("abd"):
            return self.abd()
        return self.additive()

    def let(self) -> Term:
        self.eat("let")
        f = self.ident()
        if self.at("@"):
            self.eat("@")
            p = self.ident()
            self.eat("=")
            bound = self.term()
            self.eat("in")
            body = self.term()
            return App(Abd(self.names.fresh("a"), f, p, None, body), bound)
        params: list[tuple[str, Optional[Type]]] = []
        while not self.at("="):
            params.append(self.binder())
        self.eat("=")
        bound = self.term()
        self.eat("in")
        body = self.term()
        for x, ann in reversed(params):
            bound = Abs(x, ann, bound)
        return App(Abs(f, None, body), bound)

    def binder(self) -> tuple[str, Optional[Type]]:
        if self.at("("):
            self.eat("(")
            x = self.ident()
            ann = None
            if self.at(":"):
                self.eat(":")
                ann = self.type_()
            self.eat(")")
            return x, ann
        return self.ident(), None

    def fun(self) -> Term:
        self.eat("fun")
        params = [self.binder()]
        while not self.at("->"):
            params.append(self.binder())
        self.eat("->")
        body = self.term()
        for x, ann in reversed(params):
            body = Abs(x, ann, body)
        return body

    def lam(self) -> Term:
        self.i += 1
        x = self.ident()
        ann = None
        if self.at(":"):
            self.eat(":")
            ann = self.type_()
        self.eat(".")
        return Abs(x, ann, self.term())

    def abd(self) -> Term:
        self.eat("abd")
        self.eat("(")
        f = self.ident()
        self.eat(",")
        x = self.ident()
        ann = None
        if self.at(":"):
            self.eat(":")
            ann = self.type_()
        self.eat(")")
        self.eat("->")
        return Abd(self.names.fresh("a"), f, x, ann, self.term())

    def additive(self) -> Term:
        left = self.multiplicative()
        while self.at("+") or self.at("-"):
            op = self.peek().text
            self.i += 1
            left = PrimOp(op, left, self.multiplicative())
        return left

    def multiplicative(self) -> Term:
        left = self.application()
        while self.at("*") or self.at("/") or self.peek().kind == "dot":
            op = self.peek().text
            self.i += 1
            left = PrimOp(op, left, self.application())
        return left

    def application(self) -> Term:
        if self.at("vsum") or self.at("vscale"):
            op = self.peek().text
            self.i += 1
            f = self.atom()
            v = self.atom()
            return PrimOp(op, f, v)
        t = self.atom()
        while self.starts_atom():
            t = App(t, self.atom())
        return t

    def starts_atom(self) -> bool:
        t = self.peek()
        return t.kind in ("num", "ident") or (t.kind == "sym" and t.text in ("(", "{"))

    def number(self) -> float:
        neg = False
        if self.at("-"):
            self.eat("-")
            neg = True
        t = self.peek()
        if t.kind != "num":
            raise self.error("expected number")
        self.i += 1
        v = float(t.text)
        return -v if neg else v

    def atom(self) -> Term:
        t = self.peek()
        if t.kind == "num":
            return Const(self.number())
        if t.kind == "ident":
            self.i += 1
            return Var(t.text)
        if self.at("{"):
            self.eat("{")
            v = self.number()
            self.eat("}")
            return Prov(v)
        if self.at("("):
            self.eat("(")
            if self.at("-") and self.peek(1).kind == "num" and self.peek(2).text == ")":
                v = self.number()
                self.eat(")")
                return Const(v)
            inner = self.term()
            self.eat(")")
            return inner
        if t.kind == "kw" and t.text not in ("vsum", "vscale"):
            raise self.error("reserved word used as identifier")
        raise self.error("expected a term")

    def type_(self) -> Type:
        left = self.type_atom()
        if self.at("->"):
            self.eat("->")
            return Arrow(left, self.type_())
        return left

    def type_atom(self) -> Type:
        if self.at("F"):
            self.eat("F")
            return FIELD
        if self.at("("):
            self.eat("(")
            t = self.type_()
            self.eat(")")
            return t
        raise self.error("expected a type")


def parse(source: str, names: NameSupply = GLOBAL_NAMES) -> Term:
    """Parse and desugar a program."""
    return Parser(source, names).parse()


# ---------------------------------------------------------------------------
# Pretty-printing (core syntax, fully parenthesised)

def _num(v: float) -> str:
    s = repr(float(v))
    return f"(-{s[1:]})" if s.startswith("-") else s


def _type(t: Type) -> str:
    if isinstance(t, Vec):
        raise ValueError("vector types have no surface syntax")
    if isinstance(t, Arrow):
        return f"({_type(t.dom)} -> {_type(t.cod)})"
    return "F"


def pretty(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return _num(t.value)
    if isinstance(t, Prov):
        return "{" + repr(float(t.value)) + "}"
    if isinstance(t, Abs):
        ann = f" : {_type(t.annot)}" if t.annot is not None else ""
        return f"(fun ({t.var}{ann}) -> {pretty(t.body)})"
    if isinstance(t, Abd):
        ann = f" : {_type(t.annot)}" if t.annot is not None else ""
        return f"(abd ({t.f}, {t.x}{ann}) -> {pretty(t.body)})"
    if isinstance(t, App):
        return f"({pretty(t.fun)} {pretty(t.arg)})"
    if isinstance(t, PrimOp):
        if t.op in ("vsum", "vscale"):
            return f"({t.op} {pretty(t.left)} {pretty(t.right)})"
        return f"({pretty(t.left)} {t.op} {pretty(t.right)})"
    raise TypeError(t)
