"""Port graphs with typed links and nested boxes.

Every node has ordered in-ports (links whose edge points into the node) and
out-ports (links the node points to).  A link is an output of at most one
node and an input of at most one node; interface links miss one endpoint.
Travelling "up" means following edge direction, from a link to the node it
enters.

Port layout per kind::

    LAMBDA    ins [fun T'->T, var !T']       outs [body T]
    APPLY     ins [T]                        outs [fun T'->T, arg !T']
    SCALAR    ins [F]                        outs []
    VECTOR    ins [V_a]                      outs []
    OP        ins [T]                        outs [left, right]   (left is !(..) for iterated ops)
    CONTRACT  ins n x [!T]                   outs [!T]
    PCONTRACT ins n x [prov]                 outs [prov]
    PROJECT   ins n x [!F]                   outs [!V_a]
    ABD       ins [!(V_a->T'), !V_a]         outs [!T']
    BANG      ins [!T] (outside)             outs [T] (box root)
    WHY       ins [!T] (inside)              outs [!T] (outside)
    PBANG     ins [prov]                     outs [F]
    PWHY      ins [prov] (inside)            outs [prov] (outside)
    DER       ins [T]                        outs [!T]
    PDER      ins [F]                        outs [prov]
"""

from __future__ import annotations

import copy
import itertools
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable, Iterator, Optional

from .syntax import (
    FIELD,
    Arrow,
    Field,
    Name,
    NameSupply,
    OpKind,
    Type,
    Vec,
    rename_type,
    type_names,
)


class Kind(Enum):
    LAMBDA = "λ"
    APPLY = "@"
    SCALAR = "p"
    VECTOR = "vec"
    OP = "$"
    CONTRACT = "C"
    PCONTRACT = "¡C"
    PROJECT = "P"
    ABD = "A"
    BANG = "!"
    WHY = "?"
    PBANG = "¡!"
    PWHY = "¡?"
    DER = "D"
    PDER = "¡D"


DOORS = frozenset({Kind.BANG, Kind.WHY, Kind.PWHY})
SHARING = frozenset({Kind.CONTRACT, Kind.PCONTRACT, Kind.PROJECT})


@dataclass(frozen=True)
class Enriched:
    """Link type: a plain type, an argument type !T, or the provisional type."""

    mode: str  # "plain" | "bang" | "prov"
    type: Type

    def __str__(self) -> str:
        if self.mode == "bang":
            inner = f"({self.type})" if isinstance(self.type, Arrow) else str(self.type)
            return f"!{inner}"
        if self.mode == "prov":
            return "¡!F"
        return str(self.type)

    def renamed(self, perm: dict[Name, Name]) -> "Enriched":
        return Enriched(self.mode, rename_type(self.type, perm))


PROV = Enriched("prov", FIELD)


def plain(t: Type) -> Enriched:
    return Enriched("plain", t)


def bang(t: Type) -> Enriched:
    return Enriched("bang", t)


class Node:
    __slots__ = ("id", "kind", "value", "box", "ins", "outs")

    def __init__(self, nid: int, kind: Kind, value: Any, box: Optional[int]) -> None:
        self.id = nid
        self.kind = kind
        self.value = value
        self.box = box
        self.ins: list[int] = []
        self.outs: list[int] = []

    def label(self) -> str:
        k = self.kind
        if k is Kind.SCALAR:
            return _num(self.value)
        if k is Kind.VECTOR:
            return "[" + ",".join(_num(v) for v in self.value) + "]"
        if k is Kind.OP:
            return str(self.value)
        if k in SHARING:
            return f"{k.value}{len(self.ins)}"
        return k.value

    def __repr__(self) -> str:
        return f"<{self.id}:{self.label()}>"


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() and abs(v) < 1e15 else repr(float(v))


class Link:
    __slots__ = ("id", "type", "src", "dst")

    def __init__(self, lid: int, ty: Enriched) -> None:
        self.id = lid
        self.type = ty
        self.src: Optional[tuple[int, int]] = None
        self.dst: Optional[tuple[int, int]] = None

    def __repr__(self) -> str:
        return f"<l{self.id}:{self.type} {self.src}->{self.dst}>"


class Box:
    __slots__ = ("id", "principal", "why", "pwhy", "parent", "members", "children")

    def __init__(self, bid: int, parent: Optional[int]) -> None:
        self.id = bid
        self.principal: int = -1
        self.why: list[int] = []
        self.pwhy: list[int] = []
        self.parent = parent
        self.members: set[int] = set()
        self.children: set[int] = set()


class Graph:
    """Mutable graph.  The machine owns an instance; checkers only read it."""

    def __init__(self) -> None:
        self.nodes: dict[int, Node] = {}
        self.links: dict[int, Link] = {}
        self.boxes: dict[int, Box] = {}
        self.inputs: list[int] = []
        self.outputs: list[int] = []
        self.row: list[int] = []
        self.top: set[int] = set()
        self._ids = itertools.count()

    # -- construction -----------------------------------------------------
    def fresh_id(self) -> int:
        return next(self._ids)

    def new_link(self, ty: Enriched) -> int:
        lid = self.fresh_id()
        self.links[lid] = Link(lid, ty)
        return lid

    def new_box(self, parent: Optional[int]) -> int:
        bid = self.fresh_id()
        self.boxes[bid] = Box(bid, parent)
        if parent is not None:
            self.boxes[parent].children.add(bid)
        return bid

    def new_node(
        self,
        kind: Kind,
        box: Optional[int],
        ins: Iterable[int] = (),
        outs: Iterable[int] = (),
        value: Any = None,
    ) -> int:
        nid = self.fresh_id()
        n = Node(nid, kind, value, box)
        self.nodes[nid] = n
        self._members(box).add(nid)
        for i, lid in enumerate(ins):
            n.ins.append(lid)
            self.links[lid].dst = (nid, i)
        for i, lid in enumerate(outs):
            n.outs.append(lid)
            self.links[lid].src = (nid, i)
        return nid

    def _members(self, box: Optional[int]) -> set[int]:
        return self.top if box is None else self.boxes[box].members

    def remove_node(self, nid: int) -> None:
        n = self.nodes.pop(nid)
        self._members(n.box).discard(nid)

    def remove_link(self, lid: int) -> None:
        del self.links[lid]

    def set_dst(self, lid: int, nid: int, port: int) -> None:
        self.links[lid].dst = (nid, port)
        self.nodes[nid].ins[port] = lid

    def set_src(self, lid: int, nid: int, port: int) -> None:
        self.links[lid].src = (nid, port)
        self.nodes[nid].outs[port] = lid

    def move_node(self, nid: int, box: Optional[int]) -> None:
        n = self.nodes[nid]
        self._members(n.box).discard(nid)
        n.box = box
        self._members(box).add(nid)

    def bypass(self, keep: int, drop: int) -> None:
        """Give link ``keep`` the target of link ``drop`` and delete ``drop``."""
        d = self.links[drop].dst
        self.links[keep].dst = d
        if d is not None:
            self.nodes[d[0]].ins[d[1]] = keep
        else:
            self.outputs = [keep if x == drop else x for x in self.outputs]
        del self.links[drop]

    def bypass_up(self, keep: int, drop: int) -> None:
        """Give link ``keep`` the source of link ``drop`` and delete ``drop``."""
        s = self.links[drop].src
        self.links[keep].src = s
        if s is not None:
            self.nodes[s[0]].outs[s[1]] = keep
        else:
            self.inputs = [keep if x == drop else x for x in self.inputs]
        del self.links[drop]

    # -- queries ------------------------------------------------------------
    def src_node(self, lid: int) -> Optional[Node]:
        s = self.links[lid].src
        return None if s is None else self.nodes[s[0]]

    def dst_node(self, lid: int) -> Optional[Node]:
        d = self.links[lid].dst
        return None if d is None else self.nodes[d[0]]

    @property
    def root(self) -> int:
        return self.inputs[0]

    def parent(self, box: Optional[int]) -> Optional[int]:
        return None if box is None else self.boxes[box].parent

    def side_level(self, nid: int, port: int, incoming: bool) -> Optional[int]:
        """Nesting level of the link attached at this port."""
        n = self.nodes[nid]
        if n.kind is Kind.BANG:
            return self.boxes[n.box].parent if incoming else n.box
        if n.kind in (Kind.WHY, Kind.PWHY):
            return n.box if incoming else self.boxes[n.box].parent
        return n.box

    def link_level(self, lid: int) -> Optional[int]:
        l = self.links[lid]
        if l.src is not None:
            return self.side_level(l.src[0], l.src[1], False)
        if l.dst is not None:
            return self.side_level(l.dst[0], l.dst[1], True)
        return None

    def outer_level(self, nid: int) -> Optional[int]:
        """Level of a node as seen from outside: doors count at their box's parent."""
        n = self.nodes[nid]
        if n.kind in DOORS:
            return self.boxes[n.box].parent
        return n.box

    def inside(self, box: Optional[int], within: Optional[int]) -> bool:
        """Is ``box`` equal to or nested inside ``within``?  ``None`` is the top level."""
        if within is None:
            return True
        while box is not None:
            if box == within:
                return True
            box = self.boxes[box].parent
        return False

    def box_nodes(self, bid: int) -> list[int]:
        """All nodes of a box, including doors and nested boxes."""
        out: list[int] = []
        stack = [bid]
        while stack:
            b = self.boxes[stack.pop()]
            out.extend(b.members)
            stack.extend(b.children)
        return out

    def box_tree(self, bid: int) -> list[int]:
        out, stack = [], [bid]
        while stack:
            b = stack.pop()
            out.append(b)
            stack.extend(self.boxes[b].children)
        return out

    def door_outer_links(self, bid: int) -> tuple[int, list[int], list[int]]:
        b = self.boxes[bid]
        return (
            self.nodes[b.principal].ins[0],
            [self.nodes[d].outs[0] for d in b.why],
            [self.nodes[d].outs[0] for d in b.pwhy],
        )

    def names(self) -> set[Name]:
        out: set[Name] = set()
        for l in self.links.values():
            out |= type_names(l.type.type)
        return out

    def param_values(self) -> list[float]:
        return [self.row_value(r) for r in self.row]

    def row_value(self, r: int) -> float:
        c = self.dst_node(self.nodes[r].outs[0])
        return c.value if c is not None else float("nan")

    def clone(self) -> "Graph":
        return copy.deepcopy(self)

    def count(self, kind: Kind) -> int:
        return sum(1 for n in self.nodes.values() if n.kind is kind)


# ---------------------------------------------------------------------------
# Copying and renaming

def copy_box(g: Graph, bid: int, parent: Optional[int], perm: Optional[dict[Name, Name]] = None):
    """Duplicate box ``bid`` (with nested boxes) under ``parent``.

    Returns ``(new_box, node_map, link_map)``.  Outer door links of the copy
    are fresh and unattached on their outer side.
    """
    perm = perm or {}
    nodes = g.box_nodes(bid)
    node_set = set(nodes)
    box_map: dict[int, int] = {}
    # create boxes parent-first
    order = [bid]
    i = 0
    while i < len(order):
        order.extend(sorted(g.boxes[order[i]].children))
        i += 1
    for b in order:
        old = g.boxes[b]
        np_ = parent if b == bid else box_map[old.parent]
        box_map[b] = g.new_box(np_)
    link_map: dict[int, int] = {}

    def cl(lid: int) -> int:
        if lid not in link_map:
            link_map[lid] = g.new_link(g.links[lid].type.renamed(perm) if perm else g.links[lid].type)
        return link_map[lid]

    node_map: dict[int, int] = {}
    for nid in sorted(nodes):
        n = g.nodes[nid]
        value = n.value.renamed(perm) if (perm and isinstance(n.value, OpKind)) else n.value
        m = g.new_node(n.kind, box_map[n.box], [cl(l) for l in n.ins], [cl(l) for l in n.outs], value)
        node_map[nid] = m
    for b in order:
        old, new = g.boxes[b], g.boxes[box_map[b]]
        new.principal = node_map[old.principal]
        new.why = [node_map[d] for d in old.why]
        new.pwhy = [node_map[d] for d in old.pwhy]
    # outer sides of door links must not point at the originals' neighbours
    for lid, nl in link_map.items():
        l = g.links[lid]
        new = g.links[nl]
        if l.src is not None and l.src[0] not in node_set:
            new.src = None
        if l.dst is not None and l.dst[0] not in node_set:
            new.dst = None
    return box_map[bid], node_map, link_map


def names_in_box(g: Graph, bid: int) -> set[Name]:
    out: set[Name] = set()
    types = set()
    links = g.links
    for nid in g.box_nodes(bid):
        n = g.nodes[nid]
        for lid in n.ins:
            types.add(links[lid].type.type)
        if isinstance(n.value, OpKind) and n.value.name is not None:
            out.add(n.value.name)
    for t in types:
        out |= type_names(t)
    return out


def interface_names(g: Graph, bid: int) -> set[Name]:
    p, w, pw = g.door_outer_links(bid)
    out: set[Name] = set()
    for lid in [p, *w, *pw]:
        out |= type_names(g.links[lid].type.type)
    return out


def fresh_perm(names: Iterable[Name], keep: set[Name], supply: NameSupply) -> dict[Name, Name]:
    return {a: supply.fresh(a.origin or "a") for a in sorted(names) if a not in keep}


def refresh_names(g: Graph, keep: set[Name], supply: NameSupply) -> Graph:
    """Copy of ``g`` where every name outside ``keep`` is replaced by a fresh one."""
    perm = fresh_perm(g.names() | _op_names(g), keep, supply)
    h = g.clone()
    for l in h.links.values():
        l.type = l.type.renamed(perm)
    for n in h.nodes.values():
        if isinstance(n.value, OpKind):
            n.value = n.value.renamed(perm)
    return h


def _op_names(g: Graph) -> set[Name]:
    return {n.value.name for n in g.nodes.values() if isinstance(n.value, OpKind) and n.value.name is not None}


# ---------------------------------------------------------------------------
# Well-formedness

def _schema(g: Graph, n: Node) -> list[str]:
    """Check port counts and link types of one node."""
    errs: list[str] = []
    T = lambda lid: g.links[lid].type  # noqa: E731
    k = n.kind

    def want(cond: bool, msg: str) -> None:
        if not cond:
            errs.append(f"node {n.id} ({n.label()}): {msg}")

    def arity(i: int, o: int) -> bool:
        ok = len(n.ins) == i and len(n.outs) == o
        want(ok, f"expects {i} inputs and {o} outputs, has {len(n.ins)} and {len(n.outs)}")
        return ok

    if k is Kind.LAMBDA:
        if arity(2, 1):
            f, v, b = T(n.ins[0]), T(n.ins[1]), T(n.outs[0])
            want(f.mode == "plain" and isinstance(f.type, Arrow), "input must be a function type")
            if isinstance(f.type, Arrow):
                want(v == bang(f.type.dom), "variable link must be !dom")
                want(b == plain(f.type.cod), "body link must have the codomain type")
    elif k is Kind.APPLY:
        if arity(1, 2):
            r, f, a = T(n.ins[0]), T(n.outs[0]), T(n.outs[1])
            want(f.mode == "plain" and isinstance(f.type, Arrow), "function output must be an arrow")
            if isinstance(f.type, Arrow):
                want(a == bang(f.type.dom), "argument output must be !dom")
                want(r == plain(f.type.cod), "input must have the codomain type")
    elif k is Kind.SCALAR:
        if arity(1, 0):
            want(T(n.ins[0]) == plain(FIELD), "scalar constant must have field type")
    elif k is Kind.VECTOR:
        if arity(1, 0):
            t = T(n.ins[0])
            want(t.mode == "plain" and isinstance(t.type, Vec), "vector constant must have vector type")
    elif k is Kind.OP:
        if arity(1, 2):
            a, b, c = n.value.signature()
            want(T(n.ins[0]) == plain(c), "operation result type mismatch")
            la = bang(a) if n.value.iterated else plain(a)
            want(T(n.outs[0]) == la, "left operand type mismatch")
            want(T(n.outs[1]) == plain(b), "right operand type mismatch")
    elif k is Kind.CONTRACT:
        if len(n.outs) != 1:
            want(False, "contraction needs one output")
        else:
            o = T(n.outs[0])
            want(o.mode == "bang", "contraction output must be an argument type")
            want(all(T(l) == o for l in n.ins), "contraction inputs must match output")
    elif k is Kind.PCONTRACT:
        if len(n.outs) != 1:
            want(False, "provisional contraction needs one output")
        else:
            want(T(n.outs[0]) == PROV and all(T(l) == PROV for l in n.ins), "provisional types expected")
    elif k is Kind.PROJECT:
        if len(n.outs) != 1:
            want(False, "projection needs one output")
        else:
            o = T(n.outs[0])
            want(o.mode == "bang" and isinstance(o.type, Vec), "projection output must be !V")
            want(all(T(l) == bang(FIELD) for l in n.ins), "projection inputs must be !F")
    elif k is Kind.ABD:
        if arity(2, 1):
            f, x, o = T(n.ins[0]), T(n.ins[1]), T(n.outs[0])
            want(x.mode == "bang" and isinstance(x.type, Vec), "second input must be !V")
            want(
                f.mode == "bang" and isinstance(f.type, Arrow) and f.type.dom == x.type,
                "first input must be !(V -> T)",
            )
            if isinstance(f.type, Arrow):
                want(o == bang(f.type.cod), "output must be !T")
    elif k is Kind.BANG:
        if arity(1, 1):
            i, o = T(n.ins[0]), T(n.outs[0])
            want(i.mode == "bang" and o == plain(i.type), "principal door types mismatch")
    elif k is Kind.WHY:
        if arity(1, 1):
            want(T(n.ins[0]) == T(n.outs[0]) and T(n.ins[0]).mode == "bang", "?-door types mismatch")
    elif k is Kind.PWHY:
        if arity(1, 1):
            want(T(n.ins[0]) == PROV and T(n.outs[0]) == PROV, "¡?-door types mismatch")
    elif k is Kind.PBANG:
        if arity(1, 1):
            want(T(n.ins[0]) == PROV and T(n.outs[0]) == plain(FIELD), "¡!-node types mismatch")
    elif k is Kind.DER:
        if arity(1, 1):
            i, o = T(n.ins[0]), T(n.outs[0])
            want(i.mode == "plain" and o == bang(i.type), "dereliction types mismatch")
    elif k is Kind.PDER:
        if arity(1, 1):
            want(T(n.ins[0]) == plain(FIELD) and T(n.outs[0]) == PROV, "¡D types mismatch")
    return errs


def check_wellformed(g: Graph) -> list[str]:
    """Diagnostics for port schemas, edge incidence, interfaces and box structure."""
    errs: list[str] = []
    for n in g.nodes.values():
        errs.extend(_schema(g, n))
        for i, lid in enumerate(n.ins):
            l = g.links.get(lid)
            if l is None or l.dst != (n.id, i):
                errs.append(f"node {n.id}: in-port {i} not linked back")
        for i, lid in enumerate(n.outs):
            l = g.links.get(lid)
            if l is None or l.src != (n.id, i):
                errs.append(f"node {n.id}: out-port {i} not linked back")
    ins, outs = set(g.inputs), set(g.outputs)
    for l in g.links.values():
        missing = [e[0] for e in (l.src, l.dst) if e is not None and e[0] not in g.nodes]
        if missing:
            errs.append(f"link {l.id}: attached to missing node {missing[0]}")
            continue
        if l.id in ins:
            if l.src is not None:
                errs.append(f"link {l.id}: input link is the target of an edge")
            if l.dst is None:
                errs.append(f"link {l.id}: input link is the source of no edge")
        elif l.id in outs:
            if l.dst is not None:
                errs.append(f"link {l.id}: output link is the source of an edge")
            if l.src is None:
                errs.append(f"link {l.id}: output link is the target of no edge")
        else:
            if l.src is None or l.dst is None:
                errs.append(f"link {l.id}: dangling link")
        if l.src is not None and l.dst is not None:
            a = g.side_level(l.src[0], l.src[1], False)
            b = g.side_level(l.dst[0], l.dst[1], True)
            if a != b:
                errs.append(f"link {l.id}: crosses a box boundary without a door")
    for b in g.boxes.values():
        p = g.nodes.get(b.principal)
        if p is None or p.kind is not Kind.BANG or p.box != b.id:
            errs.append(f"box {b.id}: bad principal door")
        doors = {b.principal, *b.why, *b.pwhy}
        for d in b.why:
            if d not in g.nodes or g.nodes[d].kind is not Kind.WHY or g.nodes[d].box != b.id:
                errs.append(f"box {b.id}: bad ?-door {d}")
        for d in b.pwhy:
            if d not in g.nodes or g.nodes[d].kind is not Kind.PWHY or g.nodes[d].box != b.id:
                errs.append(f"box {b.id}: bad ¡?-door {d}")
        for m in b.members:
            if g.nodes[m].kind in DOORS and m not in doors:
                errs.append(f"box {b.id}: door {m} not registered")
        seen = set()
        x: Optional[int] = b.id
        while x is not None:
            if x in seen:
                errs.append(f"box {b.id}: nesting cycle")
                break
            seen.add(x)
            x = g.boxes[x].parent
    for n in g.nodes.values():
        if n.kind in DOORS and n.box is None:
            errs.append(f"node {n.id}: door outside any box")
    return errs


# ---------------------------------------------------------------------------
# Box-reachability

def box_successors(g: Graph, lid: int) -> Iterator[int]:
    """Links one step further along a box-path from ``lid``."""
    d = g.links[lid].dst
    if d is None:
        return
    n = g.nodes[d[0]]
    if n.kind is Kind.BANG:
        # either enter the box, or skip it to its auxiliary outputs
        yield n.outs[0]
        b = g.boxes[n.box]
        for door in itertools.chain(b.why, b.pwhy):
            yield g.nodes[door].outs[0]
        return
    yield from n.outs


def box_reachable(g: Graph, frm: tuple[str, int], to: tuple[str, int]) -> bool:
    """Endpoints are ("node", id) or ("link", id)."""
    if frm == to:
        return True
    if frm[0] == "node":
        start = list(g.nodes[frm[1]].outs)
    else:
        start = [frm[1]]
    target_link = to[1] if to[0] == "link" else None
    target_node = to[1] if to[0] == "node" else None
    seen: set[int] = set()
    queue = deque(start)
    while queue:
        lid = queue.popleft()
        if lid in seen:
            continue
        seen.add(lid)
        if lid == target_link:
            return True
        d = g.links[lid].dst
        if d is not None and d[0] == target_node:
            return True
        queue.extend(box_successors(g, lid))
    return False


# ---------------------------------------------------------------------------
# Composite graphs

@dataclass
class CompositeDecomposition:
    definitive: Graph
    params: list[float]


class NotComposite(Exception):
    pass


def decompose_composite(g: Graph) -> CompositeDecomposition:
    if len(g.inputs) != 1 or g.outputs:
        raise NotComposite("composite graphs have one input and no outputs")
    row = list(g.row)
    all_pbang = [n.id for n in g.nodes.values() if n.kind is Kind.PBANG]
    if sorted(all_pbang) != sorted(row):
        stray = sorted(set(all_pbang) - set(row))
        raise NotComposite(f"¡!-node {stray[0] if stray else '?'} lies outside the parameter row")
    h = g.clone()
    params: list[float] = []
    outs: list[int] = []
    for r in row:
        n = h.nodes[r]
        if n.box is not None:
            raise NotComposite(f"¡!-node {r} is inside a box")
        c = h.dst_node(n.outs[0])
        if c is None or c.kind is not Kind.SCALAR or c.box is not None:
            raise NotComposite(f"¡!-node {r} is not over a scalar constant")
        params.append(c.value)
        lin = n.ins[0]
        h.links[lin].dst = None
        outs.append(lin)
        h.remove_link(n.outs[0])
        h.remove_node(c.id)
        h.remove_node(r)
    h.outputs = outs
    h.row = []
    for lid in outs:
        if h.links[lid].type != PROV:
            raise NotComposite(f"output link {lid} is not provisional")
    return CompositeDecomposition(h, params)


def recompose(dec: CompositeDecomposition) -> Graph:
    g = dec.definitive.clone()
    outs = list(g.outputs)
    g.outputs = []
    for lid, p in zip(outs, dec.params):
        mid = g.new_link(plain(FIELD))
        r = g.new_node(Kind.PBANG, None, [lid], [mid])
        g.new_node(Kind.SCALAR, None, [mid], [], float(p))
        g.row.append(r)
    return g


# ---------------------------------------------------------------------------
# Canonical form, for comparing graphs up to ids and name permutation

def canonical(g: Graph) -> tuple:
    """An id- and name-independent encoding of the graph."""
    starts = [g.dst_node(l).id for l in g.inputs if g.dst_node(l) is not None] + list(g.row)
    seen: set[int] = set()
    parts = []
    for s in starts:
        if s not in seen:
            parts.append(_encode_component(g, s, seen))
    rest = [n for n in g.nodes if n not in seen]
    comps = []
    while rest:
        s = rest[0]
        comp_nodes: set[int] = set()
        _encode_component(g, s, comp_nodes)
        best = min(_encode_component(g, t, set()) for t in comp_nodes)
        comps.append(best)
        seen |= comp_nodes
        rest = [n for n in rest if n not in seen]
    return tuple(parts) + tuple(sorted(comps))


def _encode_component(g: Graph, start: int, seen: set[int]) -> tuple:
    num: dict[int, int] = {}
    box_num: dict[Optional[int], int] = {None: -1}
    name_num: dict[Name, int] = {}
    order = [start]
    num[start] = 0
    seen.add(start)
    out = []

    def nm(t: Type) -> str:
        if isinstance(t, Vec):
            return f"V{name_num.setdefault(t.name, len(name_num))}"
        if isinstance(t, Arrow):
            return f"({nm(t.dom)}>{nm(t.cod)})"
        return "F"

    def bx(b: Optional[int]) -> int:
        if b not in box_num:
            box_num[b] = len(box_num)
        return box_num[b]

    i = 0
    while i < len(order):
        n = g.nodes[order[i]]
        i += 1
        ports = []
        for lid in n.ins:
            l = g.links[lid]
            other = l.src
            if other is not None and other[0] not in num:
                num[other[0]] = len(num)
                order.append(other[0])
                seen.add(other[0])
            ports.append(("i", num[other[0]] if other else -1, other[1] if other else -1, l.type.mode, nm(l.type.type)))
        for lid in n.outs:
            l = g.links[lid]
            other = l.dst
            if other is not None and other[0] not in num:
                num[other[0]] = len(num)
                order.append(other[0])
                seen.add(other[0])
            ports.append(("o", num[other[0]] if other else -1, other[1] if other else -1, l.type.mode, nm(l.type.type)))
        val = n.value
        if isinstance(val, OpKind):
            val = (val.op.value, nm(Vec(val.name)) if val.name else "")
        parent_chain = []
        b = n.box
        while b is not None:
            parent_chain.append(bx(b))
            b = g.boxes[b].parent
        out.append((n.kind.value, val, tuple(parent_chain), tuple(ports)))
    return tuple(out)
