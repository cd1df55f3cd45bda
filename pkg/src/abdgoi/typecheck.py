"""Linear type checker producing judgements ``A | G | params |- t : T``.

Unannotated binders get inference variables solved by unification.  Overloaded
surface operators are resolved once their operand types are known; operators
whose operands stay undetermined default to the field.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Union

from .syntax import (
    FIELD,
    Abd,
    Abs,
    App,
    Arrow,
    Const,
    Field,
    Name,
    Op,
    OpKind,
    PrimOp,
    Prov,
    Term,
    Type,
    Var,
    Vec,
    prov_values,
    type_names,
)


class TypeErrorAt(Exception):
    """A typing failure, with the offending subterm when known."""

    def __init__(self, message: str, term: Optional[Term] = None) -> None:
        super().__init__(message)
        self.term = term


@dataclass(frozen=True)
class Judgement:
    names: frozenset[Name]
    context: tuple[tuple[str, Type], ...]
    params: tuple[float, ...]
    subject: Term
    type: Type

    def summary(self) -> str:
        ps = ", ".join(_fmt(p) for p in self.params)
        return f"type {self.type}, params [{ps}]"


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(x)


# ---------------------------------------------------------------------------
# Inference variables

@dataclass(eq=False)
class Meta:
    id: int
    ref: Optional["IType"] = None

    def __repr__(self) -> str:
        return f"?{self.id}"


IType = Union[Field, Vec, Arrow, Meta, "IArrow"]


@dataclass(frozen=True)
class IArrow:
    dom: IType
    cod: IType


class _Solver:
    def __init__(self) -> None:
        self.ids = itertools.count()

    def meta(self) -> Meta:
        return Meta(next(self.ids))

    def walk(self, t: IType) -> IType:
        while isinstance(t, Meta) and t.ref is not None:
            t = t.ref
        return t

    def occurs(self, m: Meta, t: IType) -> bool:
        t = self.walk(t)
        if t is m:
            return True
        if isinstance(t, (IArrow, Arrow)):
            return self.occurs(m, t.dom) or self.occurs(m, t.cod)
        return False

    def unify(self, a: IType, b: IType, where: Term) -> None:
        a, b = self.walk(a), self.walk(b)
        if a is b:
            return
        if isinstance(a, Meta):
            if self.occurs(a, b):
                raise TypeErrorAt("infinite type", where)
            a.ref = b
            return
        if isinstance(b, Meta):
            self.unify(b, a, where)
            return
        if isinstance(a, (Arrow, IArrow)) and isinstance(b, (Arrow, IArrow)):
            self.unify(a.dom, b.dom, where)
            self.unify(a.cod, b.cod, where)
            return
        if isinstance(a, Vec) and isinstance(b, Vec):
            if a.name != b.name:
                raise TypeErrorAt(f"mixing vector types {a} and {b}", where)
            return
        if type(a) is type(b) and isinstance(a, Field):
            return
        raise TypeErrorAt(f"type mismatch: {self.show(a)} vs {self.show(b)}", where)

    def resolve(self, t: IType, default: bool = True) -> Type:
        t = self.walk(t)
        if isinstance(t, Meta):
            if not default:
                raise TypeErrorAt("undetermined type")
            t.ref = FIELD
            return FIELD
        if isinstance(t, (Arrow, IArrow)):
            return Arrow(self.resolve(t.dom, default), self.resolve(t.cod, default))
        return t

    def show(self, t: IType) -> str:
        t = self.walk(t)
        if isinstance(t, (Arrow, IArrow)):
            d = self.walk(t.dom)
            ds = f"({self.show(d)})" if isinstance(d, (Arrow, IArrow)) else self.show(d)
            return f"{ds} -> {self.show(t.cod)}"
        return repr(t) if isinstance(t, Meta) else str(t)

    def names_in(self, t: IType) -> frozenset[Name]:
        t = self.walk(t)
        if isinstance(t, Vec):
            return frozenset([t.name])
        if isinstance(t, (Arrow, IArrow)):
            return self.names_in(t.dom) | self.names_in(t.cod)
        return frozenset()


# ---------------------------------------------------------------------------

@dataclass
class _PendingOp:
    node: PrimOp
    left: IType
    right: IType
    result: IType
    kind: Optional[OpKind] = None


@dataclass
class _Scope:
    node: Abd
    outer: list[IType]
    dom: IType
    result: IType


class _Checker:
    def __init__(self) -> None:
        self.s = _Solver()
        self.ops: dict[int, _PendingOp] = {}
        self.abs_types: dict[int, IType] = {}
        self.abd_doms: dict[int, IType] = {}
        self.scopes: list[_Scope] = []

    def infer(self, t: Term, env: dict[str, IType]) -> IType:
        s = self.s
        if isinstance(t, Var):
            if t.name not in env:
                raise TypeErrorAt(f"unbound variable {t.name!r}", t)
            return env[t.name]
        if isinstance(t, (Const, Prov)):
            return FIELD
        if isinstance(t, Abs):
            dom: IType = t.annot if t.annot is not None else s.meta()
            self.abs_types[id(t)] = dom
            body = self.infer(t.body, {**env, t.var: dom})
            return IArrow(dom, body)
        if isinstance(t, App):
            fun = self.infer(t.fun, env)
            arg = self.infer(t.arg, env)
            fw = s.walk(fun)
            if isinstance(fw, (Field, Vec)):
                raise TypeErrorAt(f"{fw} is not an arrow", t)
            res = s.meta()
            s.unify(fun, IArrow(arg, res), t)
            return res
        if isinstance(t, PrimOp):
            left = self.infer(t.left, env)
            right = self.infer(t.right, env)
            res = s.meta()
            pend = _PendingOp(t, left, right, res)
            self.ops[id(t)] = pend
            self.try_resolve(pend, default=False)
            return res
        if isinstance(t, Abd):
            dom = t.annot if t.annot is not None else s.meta()
            self.abd_doms[id(t)] = dom
            v = Vec(t.name)
            inner = {**env, t.f: IArrow(v, dom), t.x: v}
            body = self.infer(t.body, inner)
            self.scopes.append(_Scope(t, list(env.values()), dom, body))
            return IArrow(dom, body)
        raise TypeErrorAt(f"unknown term {t!r}", t)

    def try_resolve(self, p: _PendingOp, default: bool) -> bool:
        if p.kind is not None:
            return True
        s = self.s
        sym, node = p.node.op, p.node
        l, r = s.walk(p.left), s.walk(p.right)
        kind: Optional[OpKind] = None
        if sym in ("-", "/"):
            kind = OpKind(Op.SUB if sym == "-" else Op.DIV)
        elif sym == "+":
            if isinstance(l, Vec) or isinstance(r, Vec):
                kind = OpKind(Op.VADD, (l if isinstance(l, Vec) else r).name)
            elif isinstance(l, Field) or isinstance(r, Field) or default:
                kind = OpKind(Op.ADD)
            elif isinstance(l, (IArrow, Arrow)) or isinstance(r, (IArrow, Arrow)):
                raise TypeErrorAt("operand of + is a function", node)
        elif sym == "*":
            if isinstance(r, Vec):
                kind = OpKind(Op.SMUL, r.name)
            elif isinstance(l, Vec):
                raise TypeErrorAt("left operand of scalar multiplication must be a scalar", node)
            elif isinstance(r, Field) or default:
                kind = OpKind(Op.MUL)
            elif isinstance(l, (IArrow, Arrow)) or isinstance(r, (IArrow, Arrow)):
                raise TypeErrorAt("operand of * is a function", node)
        elif sym == ".":
            if isinstance(l, Vec) or isinstance(r, Vec):
                kind = OpKind(Op.DOT, (l if isinstance(l, Vec) else r).name)
            elif isinstance(l, Field) or isinstance(r, Field):
                raise TypeErrorAt("dot product needs vector operands", node)
            elif default:
                raise TypeErrorAt("cannot determine the vector space of a dot product", node)
        elif sym in ("vsum", "vscale"):
            v = r if isinstance(r, Vec) else None
            if v is None:
                fl = l
                if isinstance(fl, (IArrow, Arrow)) and isinstance(s.walk(fl.dom), Vec):
                    v = s.walk(fl.dom)
            if v is not None:
                kind = OpKind(Op.VSUM if sym == "vsum" else Op.VSCALE, v.name)
            elif isinstance(r, Field):
                raise TypeErrorAt(f"{sym} needs a vector operand", node)
            elif default:
                raise TypeErrorAt(f"cannot determine the vector space of {sym}", node)
        else:
            raise TypeErrorAt(f"unknown operator {sym!r}", node)
        if kind is None:
            return False
        a, b, c = kind.signature()
        s.unify(p.left, a, node)
        s.unify(p.right, b, node)
        s.unify(p.result, c, node)
        p.kind = kind
        return True

    def finish(self) -> None:
        pending = [p for p in self.ops.values() if p.kind is None]
        while pending:
            progress = [p for p in pending if self.try_resolve(p, default=False)]
            pending = [p for p in pending if p.kind is None]
            if not progress and pending:
                self.try_resolve(pending[0], default=True)
                pending = pending[1:]
        s = self.s
        for sc in self.scopes:
            a = sc.node.name
            if a in s.names_in(sc.result):
                raise TypeErrorAt(f"vector name {a} escapes its decoupling (result type)", sc.node)
            if a in s.names_in(sc.dom):
                raise TypeErrorAt(f"vector name {a} escapes its decoupling (argument type)", sc.node)
            for t in sc.outer:
                if a in s.names_in(t):
                    raise TypeErrorAt(f"vector name {a} escapes its decoupling (context)", sc.node)

    def rebuild(self, t: Term) -> Term:
        s = self.s
        if isinstance(t, Abs):
            return Abs(t.var, s.resolve(self.abs_types[id(t)]), self.rebuild(t.body))
        if isinstance(t, Abd):
            return Abd(t.name, t.f, t.x, s.resolve(self.abd_doms[id(t)]), self.rebuild(t.body))
        if isinstance(t, App):
            return App(self.rebuild(t.fun), self.rebuild(t.arg))
        if isinstance(t, PrimOp):
            return PrimOp(t.op, self.rebuild(t.left), self.rebuild(t.right), self.ops[id(t)].kind)
        return t


def _check_fresh(t: Term) -> None:
    seen: set[Name] = set()

    def go(u: Term) -> None:
        if isinstance(u, Abd):
            if u.name in seen:
                raise TypeErrorAt(f"decoupling name {u.name} used twice", u)
            seen.add(u.name)
            go(u.body)
        elif isinstance(u, Abs):
            go(u.body)
        elif isinstance(u, App):
            go(u.fun)
            go(u.arg)
        elif isinstance(u, PrimOp):
            go(u.left)
            go(u.right)

    go(t)


def typecheck(term: Term, context: tuple[tuple[str, Type], ...] = ()) -> Judgement:
    """Check ``term`` and return its judgement, with every annotation filled in."""
    _check_fresh(term)
    c = _Checker()
    env: dict[str, IType] = dict(context)
    ty = c.infer(term, env)
    c.finish()
    subject = c.rebuild(term)
    result = c.s.resolve(ty)
    names: frozenset[Name] = type_names(result)
    for _, t in context:
        names |= type_names(t)
    return Judgement(names, tuple(context), tuple(prov_values(term)), subject, result)


def type_of(term: Term, env: dict[str, Type]) -> Type:
    """Synthesise the type of a fully annotated term (post-typecheck)."""
    if isinstance(term, Var):
        return env[term.name]
    if isinstance(term, (Const, Prov)):
        return FIELD
    if isinstance(term, Abs):
        assert term.annot is not None
        return Arrow(term.annot, type_of(term.body, {**env, term.var: term.annot}))
    if isinstance(term, App):
        ft = type_of(term.fun, env)
        assert isinstance(ft, Arrow)
        return ft.cod
    if isinstance(term, PrimOp):
        assert term.kind is not None
        return term.kind.signature()[2]
    if isinstance(term, Abd):
        assert term.annot is not None
        v = Vec(term.name)
        body = type_of(term.body, {**env, term.f: Arrow(v, term.annot), term.x: v})
        return Arrow(term.annot, body)
    raise TypeError(term)
