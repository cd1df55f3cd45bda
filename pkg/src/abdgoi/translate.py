"""Inductive translation of typed terms into composite graphs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .graph import PROV, Graph, Kind, bang, plain
from .syntax import FIELD, Abd, Abs, App, Arrow, Const, NameSupply, PrimOp, Prov, Term, Type, Var, Vec
from .syntax import parse
from .typecheck import Judgement, typecheck

_PENDING = plain(FIELD)  # placeholder type for root links typed after their subterm


@dataclass
class Fragment:
    """A translated subterm.

    ``root`` has a target but no source yet.  ``uses`` maps each free
    variable to its use links and ``provs`` lists provisional links in
    parameter order; both have a source but no target yet.
    """

    root: int
    type: Type
    uses: dict[str, list[int]] = field(default_factory=dict)
    provs: list[int] = field(default_factory=list)


def _merge(*frags: Fragment) -> tuple[dict[str, list[int]], list[int]]:
    uses: dict[str, list[int]] = {}
    provs: list[int] = []
    for f in frags:
        for x, ls in f.uses.items():
            uses.setdefault(x, []).extend(ls)
        provs.extend(f.provs)
    return uses, provs


class _Translator:
    def __init__(self, g: Graph) -> None:
        self.g = g

    def root_link(self) -> int:
        return self.g.new_link(_PENDING)

    def finish(self, lid: int, t: Type) -> None:
        self.g.links[lid].type = plain(t)

    def bind(self, uses: list[int], box: Optional[int], out: int) -> None:
        """Share a variable's use links through one contraction node."""
        self.g.new_node(Kind.CONTRACT, box, uses, [out])

    def term(self, t: Term, env: dict[str, Type], box: Optional[int]) -> Fragment:
        g = self.g
        r = self.root_link()
        if isinstance(t, Var):
            ty = env[t.name]
            u = g.new_link(bang(ty))
            g.new_node(Kind.DER, box, [r], [u])
            self.finish(r, ty)
            return Fragment(r, ty, {t.name: [u]})
        if isinstance(t, Const):
            g.new_node(Kind.SCALAR, box, [r], [], float(t.value))
            self.finish(r, FIELD)
            return Fragment(r, FIELD)
        if isinstance(t, Prov):
            p = g.new_link(PROV)
            g.new_node(Kind.PDER, box, [r], [p])
            self.finish(r, FIELD)
            return Fragment(r, FIELD, {}, [p])
        if isinstance(t, Abs):
            assert t.annot is not None
            body = self.term(t.body, {**env, t.var: t.annot}, box)
            var = g.new_link(bang(t.annot))
            ty = Arrow(t.annot, body.type)
            g.new_node(Kind.LAMBDA, box, [r, var], [body.root])
            self.bind(body.uses.pop(t.var, []), box, var)
            self.finish(r, ty)
            return Fragment(r, ty, body.uses, body.provs)
        if isinstance(t, App):
            fun = self.term(t.fun, env, box)
            arg = self.boxed(t.arg, env, box)
            assert isinstance(fun.type, Arrow)
            g.new_node(Kind.APPLY, box, [r], [fun.root, arg.root])
            uses, provs = _merge(fun, arg)
            self.finish(r, fun.type.cod)
            return Fragment(r, fun.type.cod, uses, provs)
        if isinstance(t, PrimOp):
            assert t.kind is not None
            left = self.boxed(t.left, env, box) if t.kind.iterated else self.term(t.left, env, box)
            right = self.term(t.right, env, box)
            g.new_node(Kind.OP, box, [r], [left.root, right.root], t.kind)
            uses, provs = _merge(left, right)
            ty = t.kind.signature()[2]
            self.finish(r, ty)
            return Fragment(r, ty, uses, provs)
        if isinstance(t, Abd):
            assert t.annot is not None
            v = Vec(t.name)
            fty = Arrow(v, t.annot)
            body = self.boxed(t.body, {**env, t.f: fty, t.x: v}, box)
            inner = body.type
            var = g.new_link(bang(t.annot))
            mid = g.new_link(plain(inner))
            ty = Arrow(t.annot, inner)
            g.new_node(Kind.LAMBDA, box, [r, var], [mid])
            g.new_node(Kind.DER, box, [mid], [body.root])
            fl = g.new_link(bang(fty))
            xl = g.new_link(bang(v))
            g.new_node(Kind.ABD, box, [fl, xl], [var])
            self.bind(body.uses.pop(t.f, []), box, fl)
            self.bind(body.uses.pop(t.x, []), box, xl)
            self.finish(r, ty)
            return Fragment(r, ty, body.uses, body.provs)
        raise TypeError(f"cannot translate {t!r}")

    def boxed(self, t: Term, env: dict[str, Type], box: Optional[int]) -> Fragment:
        """Translate ``t`` inside a fresh box; the root returned is the box's input."""
        g = self.g
        b = g.new_box(box)
        inner = self.term(t, env, b)
        outer_root = g.new_link(bang(inner.type))
        g.boxes[b].principal = g.new_node(Kind.BANG, b, [outer_root], [inner.root])
        uses: dict[str, list[int]] = {}
        for x, ls in inner.uses.items():
            outs = []
            for lid in ls:
                o = g.new_link(g.links[lid].type)
                g.boxes[b].why.append(g.new_node(Kind.WHY, b, [lid], [o]))
                outs.append(o)
            uses[x] = outs
        provs = []
        for lid in inner.provs:
            o = g.new_link(PROV)
            g.boxes[b].pwhy.append(g.new_node(Kind.PWHY, b, [lid], [o]))
            provs.append(o)
        return Fragment(outer_root, inner.type, uses, provs)


def translate(judgement: Judgement, supply: Optional[NameSupply] = None) -> Graph:
    """Composite graph of a closed judgement: the definitive part over the parameter row.

    ``supply`` is accepted for interface symmetry; translation itself
    introduces no names beyond those already in the typed term.
    """
    if judgement.context:
        raise ValueError("only closed judgements can be translated")
    g = Graph()
    tr = _Translator(g)
    frag = tr.term(judgement.subject, {}, None)
    if frag.uses:
        raise ValueError(f"free variables {sorted(frag.uses)} in a closed judgement")
    g.inputs = [frag.root]
    for lid, p in zip(frag.provs, judgement.params):
        mid = g.new_link(plain(FIELD))
        row = g.new_node(Kind.PBANG, None, [lid], [mid])
        g.new_node(Kind.SCALAR, None, [mid], [], float(p))
        g.row.append(row)
    return g


def compile_source(source: str) -> tuple[Judgement, Graph]:
    """Parse, type-check and translate a program."""
    j = typecheck(parse(source))
    return j, translate(j)
