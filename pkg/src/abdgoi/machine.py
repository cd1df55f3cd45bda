"""Token-passing graph-rewriting machine.

A single token walks the graph.  With the rewriting flag at ``□`` it makes
pass transitions that only touch the token; any other flag asks for a
rewrite of the graph around the token.  Deep rewrites act away from the
token, on nodes found by box-reachability from the doors of the box the
token sits on.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Optional, Union

from .graph import (
    PROV,
    Graph,
    Kind,
    NotComposite,
    bang,
    copy_box,
    decompose_composite,
    fresh_perm,
    interface_names,
    names_in_box,
    plain,
)
from .oracle import fdiv
from .syntax import FIELD, Arrow, Name, NameSupply, Op, OpKind, Vec

STAR = "★"
AT = "@"
LAM = "λ"
BOTTOM = "□"


class Flag(Enum):
    NONE = "□"
    LAMBDA = "λ"
    OP0 = "$0"
    OP1 = "$1"
    QUESTION = "?"
    BANG = "!"


@dataclass
class Token:
    up: bool
    flag: Flag
    cstack: list[Any]
    bstack: list[int]
    position: int
    n: int = 0  # dimension carried by an iterated-operation flag

    @property
    def direction(self) -> str:
        return "up" if self.up else "down"

    def flag_text(self) -> str:
        return f"$1({self.n})" if self.flag is Flag.OP1 else self.flag.value


@dataclass
class MachineState:
    graph: Graph
    token: Token
    supply: NameSupply
    steps: int = 0
    seed: Optional[int] = None
    rng: Optional[random.Random] = None
    params: tuple[float, ...] = ()
    rule: str = ""
    kind: str = ""
    changed: bool = False
    gc_pending: set[int] = field(default_factory=set)
    gc_mark: int = 0


class NoRule(Exception):
    """No transition applies; carries a diagnostic."""


@dataclass
class Final:
    graph: Graph
    result: Any
    steps: int
    state: MachineState


@dataclass
class StepLimit:
    state: MachineState


@dataclass
class Stuck:
    state: MachineState
    diagnostic: str


Outcome = Union[Final, StepLimit, Stuck]


def format_value(x: Any) -> str:
    if isinstance(x, float):
        return _num(x)
    if isinstance(x, tuple):
        return "[" + ", ".join(_num(v) for v in x) + "]"
    return str(x)


def _num(v: float) -> str:
    if v != v or v in (float("inf"), float("-inf")):
        return repr(v)
    return str(int(v)) if float(v).is_integer() and abs(v) < 1e15 else repr(v)


# ---------------------------------------------------------------------------
# Initial and final states

def _name_supply_for(g: Graph) -> NameSupply:
    ids = [a.id for a in g.names()]
    ids += [n.value.name.id for n in g.nodes.values() if isinstance(n.value, OpKind) and n.value.name is not None]
    return NameSupply(max(ids, default=-1) + 1)


def init_state(graph: Graph, seed: Optional[int] = None, supply: Optional[NameSupply] = None) -> MachineState:
    dec = decompose_composite(graph)
    tok = Token(True, Flag.NONE, [BOTTOM, STAR], [], graph.root)
    rng = random.Random(seed) if seed is not None else None
    return MachineState(graph, tok, supply or _name_supply_for(graph), 0, seed, rng, tuple(dec.params))


def is_final(state: MachineState) -> bool:
    t = state.token
    g = state.graph
    return (
        not t.up
        and t.flag is Flag.NONE
        and t.position == g.root
        and len(t.cstack) == 2
        and not t.bstack
    )


# ---------------------------------------------------------------------------
# Primitive arithmetic on token data

def apply_op(kind: OpKind, a: Any, b: Any) -> Any:
    op = kind.op
    if op is Op.ADD:
        return a + b
    if op is Op.SUB:
        return a - b
    if op is Op.MUL:
        return a * b
    if op is Op.DIV:
        return fdiv(a, b)
    if op is Op.VADD:
        _same_dim(a, b)
        return tuple(x + y for x, y in zip(a, b))
    if op is Op.SMUL:
        return tuple(a * y for y in b)
    if op is Op.DOT:
        _same_dim(a, b)
        acc = 0.0
        for x, y in zip(a, b):
            acc = acc + x * y
        return acc
    raise NoRule(f"operation {kind} is not a simple operation")


def _same_dim(a: tuple, b: tuple) -> None:
    if len(a) != len(b):
        raise NoRule(f"vector dimensions differ: {len(a)} vs {len(b)}")


# ---------------------------------------------------------------------------
# Pass transitions

_PASS_UP = {k: f"pass-up {k.value}" for k in Kind}
_PASS_DOWN = {k: f"pass-down {k.value}" for k in Kind}

def pass_step(state: MachineState) -> MachineState:
    g = state.graph
    t = state.token
    if t.flag is not Flag.NONE:
        raise NoRule("pass transitions need the flag □")
    link = g.links[t.position]
    s = t.cstack
    if t.up:
        if link.dst is None:
            raise NoRule(f"token leaves the graph upwards at link {link.id}")
        n = g.nodes[link.dst[0]]
        k = n.kind
        state.rule = _PASS_UP[k]
        if k is Kind.APPLY:
            s.append(STAR)
            t.position = n.outs[1]
        elif k is Kind.LAMBDA:
            if link.dst[1] != 0:
                raise NoRule(f"token reached the variable of λ-node {n.id}")
            if s[-1] == STAR:
                s[-1] = LAM
                t.up = False
            elif s[-1] == AT:
                s.pop()
                t.position = n.outs[0]
                t.flag = Flag.LAMBDA
            else:
                raise NoRule(f"λ-node {n.id} met {s[-1]!r}")
        elif k is Kind.SCALAR or k is Kind.VECTOR:
            if s[-1] != STAR:
                raise NoRule(f"constant {n.id} met {s[-1]!r}")
            s[-1] = n.value
            t.up = False
        elif k is Kind.OP:
            s.append(STAR)
            t.position = n.outs[1]
        elif k is Kind.CONTRACT or k is Kind.PCONTRACT:
            if not n.ins:
                raise NoRule(f"no pass through {n.label()}-node {n.id}")
            t.bstack.append(link.id)
            t.position = n.outs[0]
        elif k is Kind.BANG:
            t.position = n.outs[0]
            t.flag = Flag.QUESTION
        elif k in (Kind.DER, Kind.PDER, Kind.PBANG, Kind.PWHY):
            t.position = n.outs[0]
        else:
            raise NoRule(f"no upward pass rule for {n.label()}-node {n.id}")
        return state
    if link.src is None:
        raise NoRule("token left through the root")
    n = g.nodes[link.src[0]]
    port = link.src[1]
    k = n.kind
    state.rule = _PASS_DOWN[k]
    if k is Kind.APPLY:
        if port != 1:
            raise NoRule(f"token leaves application {n.id} through its function side")
        s[-1] = AT
        t.position = n.outs[0]
        t.up = True
    elif k is Kind.OP:
        if port == 1:
            s.append(STAR)
            t.position = n.outs[0]
            t.up = True
        else:
            k1 = s.pop()
            k2 = s.pop()
            if s[-1] != STAR:
                raise NoRule(f"operation {n.id} lost its query")
            t.position = n.ins[0]
            if n.value.iterated:
                if not isinstance(k2, tuple):
                    raise NoRule(f"iterated operation {n.id} needs a vector")
                t.flag = Flag.OP1
                t.n = len(k2)
                t.up = True
            else:
                s[-1] = apply_op(n.value, k1, k2)
                t.flag = Flag.OP0
    elif k is Kind.PCONTRACT:
        if not t.bstack:
            raise NoRule(f"box stack empty at {n.label()}-node {n.id}")
        back = t.bstack.pop()
        if back not in n.ins:
            raise NoRule(f"box stack top {back} is not an input of node {n.id}")
        t.position = back
    elif k in (Kind.BANG, Kind.DER, Kind.PDER, Kind.PBANG, Kind.PWHY):
        t.position = n.ins[0]
    else:
        raise NoRule(f"no downward pass rule for {n.label()}-node {n.id}")
    return state


# ---------------------------------------------------------------------------
# Graph surgery shared by the rewrites

def _delete_node(g: Graph, nid: int, drop_links: bool = False) -> None:
    n = g.nodes[nid]
    if drop_links:
        for lid in n.ins + n.outs:
            if lid in g.links:
                g.remove_link(lid)
    g.remove_node(nid)


def _delete_box(g: Graph, bid: int, keep: set[int]) -> None:
    """Delete a box with its doors and contents.  Links in ``keep`` survive, detached."""
    nodes = g.box_nodes(bid)
    gone = set(nodes)
    for nid in nodes:
        n = g.nodes[nid]
        for lid in n.ins + n.outs:
            l = g.links.get(lid)
            if l is None:
                continue
            if lid in keep:
                if l.src is not None and l.src[0] in gone:
                    l.src = None
                if l.dst is not None and l.dst[0] in gone:
                    l.dst = None
            else:
                g.remove_link(lid)
    for nid in nodes:
        g.remove_node(nid)
    tree = g.box_tree(bid)
    parent = g.boxes[bid].parent
    if parent is not None:
        g.boxes[parent].children.discard(bid)
    for b in tree:
        del g.boxes[b]


def _refreshed_copy(state: MachineState, bid: int, parent: Optional[int], keep: Optional[set[Name]] = None):
    g = state.graph
    keep = interface_names(g, bid) if keep is None else keep
    perm = fresh_perm(names_in_box(g, bid), keep, state.supply)
    return copy_box(g, bid, parent, perm)


def _plug_principal(g: Graph, bid: int, lid: int) -> None:
    """Make existing link ``lid`` the principal input of box ``bid``."""
    p = g.nodes[g.boxes[bid].principal]
    fresh = p.ins[0]
    g.remove_link(fresh)
    g.set_dst(lid, p.id, 0)


def _share(g: Graph, kind: Kind, box: Optional[int], ins: list[int], out: int) -> int:
    """Put a sharing node with inputs ``ins`` in front of the existing link ``out``."""
    n = g.new_node(kind, box, ins, [])
    g.nodes[n].outs.append(out)
    g.links[out].src = (n, 0)
    return n


def _set_inputs(g: Graph, nid: int, ins: list[int]) -> None:
    n = g.nodes[nid]
    n.ins = list(ins)
    for i, lid in enumerate(ins):
        g.links[lid].dst = (nid, i)


def _move_contents(g: Graph, bid: int, into: Optional[int]) -> None:
    """Move every non-door member and child box of ``bid`` into ``into``."""
    b = g.boxes[bid]
    doors = {b.principal, *b.why, *b.pwhy}
    for nid in list(b.members):
        if nid not in doors:
            g.move_node(nid, into)
    for c in list(b.children):
        g.boxes[c].parent = into
        if into is not None:
            g.boxes[into].children.add(c)
    b.children.clear()


def _remove_empty_box(g: Graph, bid: int) -> None:
    b = g.boxes[bid]
    if b.parent is not None:
        g.boxes[b.parent].children.discard(bid)
    del g.boxes[bid]


def _merge_door(g: Graph, door: int) -> None:
    """Remove an auxiliary door, fusing its inner link into its outer link."""
    d = g.nodes[door]
    inner, outer = d.ins[0], d.outs[0]
    g.bypass_up(outer, inner)
    g.remove_node(door)


# ---------------------------------------------------------------------------
# Deep redexes

@dataclass(frozen=True)
class Redex:
    node: int
    kind: Kind
    box: int  # the box fed by the node's output


def find_deep_redexes(state: MachineState, box: int) -> list[Redex]:
    g = state.graph
    b = g.boxes[box]
    level = b.parent
    found: list[Redex] = []
    seen: set[int] = set()
    todo = [g.nodes[d].outs[0] for d in b.why]
    while todo:
        lid = todo.pop()
        if lid in seen:
            continue
        seen.add(lid)
        d = g.links[lid].dst
        if d is None:
            continue
        n = g.nodes[d[0]]
        if n.kind is Kind.BANG:
            todo.extend(g.nodes[w].outs[0] for w in g.boxes[n.box].why)
            continue
        if n.box == level and n.id not in (r.node for r in found) and (n.kind is Kind.ABD or (n.kind in (Kind.PROJECT, Kind.CONTRACT) and n.ins)):
            tgt = g.dst_node(n.outs[0])
            if tgt is not None and tgt.kind is Kind.BANG and g.boxes[tgt.box].parent == level:
                if n.kind is Kind.CONTRACT or not g.boxes[tgt.box].why:
                    found.append(Redex(n.id, n.kind, tgt.box))
        for m in n.outs:
            if g.links[m].type.mode == "bang":
                todo.append(m)
    found.sort(key=lambda r: r.node)
    if state.rng is not None:
        state.rng.shuffle(found)
    return found


def redex_nodes(g: Graph, r: Redex) -> set[int]:
    return {r.node, *g.box_nodes(r.box)}


def _row_index(g: Graph, lid: int, rows: dict[int, int]) -> int:
    while True:
        n = g.dst_node(lid)
        if n is None:
            raise NoRule(f"provisional link {lid} does not reach the parameter row")
        if n.kind is Kind.PBANG:
            return rows[n.id]
        if n.kind in (Kind.PCONTRACT, Kind.PWHY):
            lid = n.outs[0]
        else:
            raise NoRule(f"provisional link {lid} meets {n.label()}-node {n.id}")


def _decouple(state: MachineState, r: Redex) -> None:
    g = state.graph
    a_node = g.nodes[r.node]
    level = a_node.box
    fl, xl, ol = a_node.ins[0], a_node.ins[1], a_node.outs[0]
    vty = g.links[xl].type.type
    assert isinstance(vty, Vec)
    h = g.boxes[r.box]
    content_ty = g.links[ol].type.type

    # the original box stays behind, weakened, still holding the parameter row
    g.remove_node(a_node.id)
    g.new_node(Kind.CONTRACT, level, [], [ol])

    rows = {nid: i for i, nid in enumerate(g.row)}
    door_rows = [_row_index(g, g.nodes[d].outs[0], rows) for d in h.pwhy]
    used = sorted(set(door_rows))
    values = tuple(float(g.row_value(g.row[j])) for j in used)

    # model box: λ over a projection of the parameter vector into a converted copy
    m = g.new_box(level)
    mroot = g.new_link(plain(Arrow(vty, content_ty)))
    g.boxes[m].principal = g.new_node(Kind.BANG, m, [fl], [mroot])
    var = g.new_link(bang(vty))
    body = g.new_link(plain(content_ty))
    g.new_node(Kind.LAMBDA, m, [mroot, var], [body])
    dl = g.new_link(bang(content_ty))
    g.new_node(Kind.DER, m, [body], [dl])
    copy, node_map, link_map = _refreshed_copy(state, r.box, m)
    _plug_principal(g, copy, dl)
    _make_definitive(g, copy, set(link_map.values()))
    groups: dict[int, list[int]] = {j: [] for j in used}
    for d, j in zip(g.boxes[copy].why, door_rows):
        groups[j].append(g.nodes[d].outs[0])
    proj_ins = []
    for j in used:
        ls = groups[j]
        if len(ls) == 1:
            proj_ins.append(ls[0])
        else:
            o = g.new_link(bang(FIELD))
            g.new_node(Kind.CONTRACT, m, ls, [o])
            proj_ins.append(o)
    g.new_node(Kind.PROJECT, m, proj_ins, [var])

    # parameter box: the current values as one vector constant
    x = g.new_box(level)
    vl = g.new_link(plain(vty))
    g.boxes[x].principal = g.new_node(Kind.BANG, x, [xl], [vl])
    g.new_node(Kind.VECTOR, x, [vl], [], values)


def _make_definitive(g: Graph, bid: int, links: set[int]) -> None:
    """Turn provisional structure of a copied box into definitive structure."""
    for lid in links:
        if lid in g.links and g.links[lid].type == PROV:
            g.links[lid].type = bang(FIELD)
    for b in g.box_tree(bid):
        box = g.boxes[b]
        box.why = box.why + box.pwhy
        box.pwhy = []
    for nid in g.box_nodes(bid):
        n = g.nodes[nid]
        if n.kind is Kind.PDER:
            n.kind = Kind.DER
        elif n.kind is Kind.PCONTRACT:
            n.kind = Kind.CONTRACT
        elif n.kind is Kind.PWHY:
            n.kind = Kind.WHY


def _project(state: MachineState, r: Redex) -> None:
    g = state.graph
    p = g.nodes[r.node]
    level = p.box
    e = g.boxes[r.box]
    n = len(p.ins)
    vty = g.links[p.outs[0]].type.type
    assert isinstance(vty, Vec)
    outer_prov = [g.nodes[d].outs[0] for d in e.pwhy]
    copies_prov: list[list[int]] = [[] for _ in outer_prov]
    for i, lid in enumerate(list(p.ins)):
        bi = g.new_box(level)
        root = g.new_link(plain(FIELD))
        g.boxes[bi].principal = g.new_node(Kind.BANG, bi, [lid], [root])
        copy, _, _ = _refreshed_copy(state, r.box, bi, keep=set())
        croot = g.nodes[g.boxes[copy].principal].outs[0]
        cty = g.links[croot].type.type
        assert isinstance(cty, Vec)
        el = g.new_link(plain(cty))
        er = g.new_link(plain(cty))
        g.new_node(Kind.OP, bi, [root], [el, er], OpKind(Op.DOT, cty.name))
        g.new_node(Kind.VECTOR, bi, [er], [], tuple(1.0 if j == i else 0.0 for j in range(n)))
        # dissolve the copy into the new box
        cb = g.boxes[copy]
        principal = cb.principal
        g.remove_link(g.nodes[principal].ins[0])
        g.bypass(el, croot)
        g.remove_node(principal)
        _move_contents(g, copy, bi)
        for k, d in enumerate(cb.pwhy):
            g.move_node(d, bi)
            g.boxes[bi].pwhy.append(d)
            copies_prov[k].append(g.nodes[d].outs[0])
        _remove_empty_box(g, copy)
    keep = set(outer_prov)
    out = p.outs[0]
    g.remove_node(p.id)
    g.remove_link(out)
    _delete_box(g, r.box, keep)
    for lo, ins in zip(outer_prov, copies_prov):
        _share(g, Kind.PCONTRACT, level, ins, lo)


def _contract(state: MachineState, r: Redex) -> None:
    g = state.graph
    c = g.nodes[r.node]
    out = c.outs[0]
    if len(c.ins) == 1:
        g.bypass(c.ins[0], out)
        g.remove_node(c.id)
        return
    ins = list(c.ins)
    g.remove_node(c.id)
    g.links[out].src = None
    _replicate(state, r.box, ins)


def _replicate(state: MachineState, bid: int, inputs: list[int]) -> None:
    """Replace box ``bid`` by one refreshed copy per input link, sharing its doors."""
    g = state.graph
    b = g.boxes[bid]
    level = b.parent
    doors = [(Kind.CONTRACT, g.nodes[d].outs[0]) for d in b.why]
    doors += [(Kind.PCONTRACT, g.nodes[d].outs[0]) for d in b.pwhy]
    shared: list[list[int]] = [[] for _ in doors]
    for lid in inputs:
        copy, _, _ = _refreshed_copy(state, bid, level)
        _plug_principal(g, copy, lid)
        cb = g.boxes[copy]
        for k, d in enumerate(cb.why + cb.pwhy):
            shared[k].append(g.nodes[d].outs[0])
    _delete_box(g, bid, {lo for _, lo in doors})
    for (kind, lo), ins in zip(doors, shared):
        _share(g, kind, level, ins, lo)


def _absorb(g: Graph, box: int, door: int) -> None:
    """Box ``box`` swallows the box whose principal door its ?-door ``door`` feeds."""
    d = g.nodes[door]
    inner, outer = d.ins[0], d.outs[0]
    target = g.dst_node(outer)
    assert target is not None and target.kind is Kind.BANG
    h = g.boxes[target.box]
    g.bypass(inner, outer)
    g.remove_node(door)
    gb = g.boxes[box]
    gb.why.remove(door)
    if h.parent is not None:
        g.boxes[h.parent].children.discard(h.id)
    h.parent = box
    gb.children.add(h.id)
    for hd in h.why + h.pwhy:
        n = g.nodes[hd]
        lo = n.outs[0]
        li = g.new_link(g.links[lo].type)
        g.set_src(li, hd, 0)
        new = g.new_node(n.kind, box, [li], [lo])
        (gb.why if n.kind is Kind.WHY else gb.pwhy).append(new)


# ---------------------------------------------------------------------------
# Rewrite transitions

def rewrite_step(state: MachineState) -> MachineState:
    g = state.graph
    t = state.token
    f = t.flag
    state.changed = True
    if f is Flag.LAMBDA:
        body = t.position
        lam = g.src_node(body)
        if lam is None or lam.kind is not Kind.LAMBDA:
            raise NoRule("λ flag away from a λ-node")
        fun_link, var = lam.ins
        app = g.src_node(fun_link)
        if app is None or app.kind is not Kind.APPLY or g.links[fun_link].src[1] != 0:
            raise NoRule(f"λ-node {lam.id} is not applied")
        a_in, arg = app.ins[0], app.outs[1]
        g.bypass(a_in, body)
        g.bypass_up(arg, var)
        g.remove_link(fun_link)
        g.remove_node(lam.id)
        g.remove_node(app.id)
        t.position = a_in
        t.flag = Flag.NONE
        state.rule = "rewrite λ-@"
        return state
    if f is Flag.OP0:
        op = g.dst_node(t.position)
        assert op is not None and op.kind is Kind.OP
        l, r = g.dst_node(op.outs[0]), g.dst_node(op.outs[1])
        consts = (Kind.SCALAR, Kind.VECTOR)
        if l is not None and r is not None and l.kind in consts and r.kind in consts:
            for nid in (l.id, r.id):
                g.remove_node(nid)
            for lid in op.outs:
                g.remove_link(lid)
            g.remove_node(op.id)
            value = t.cstack[-1]
            kind = Kind.VECTOR if isinstance(value, tuple) else Kind.SCALAR
            g.new_node(kind, op.box, [t.position], [], value)
            state.rule = "rewrite $0 collapse"
        else:
            state.changed = False
            state.rule = "rewrite $0 keep"
        t.flag = Flag.NONE
        return state
    if f is Flag.OP1:
        _unfold(g, t.position, t.n)
        t.flag = Flag.NONE
        state.rule = f"rewrite $1 unfold {t.n}"
        return state
    if f is Flag.QUESTION:
        src = g.src_node(t.position)
        assert src is not None and src.kind is Kind.BANG
        box = src.box
        redexes = find_deep_redexes(state, box)
        if redexes:
            r = redexes[0]
            if r.kind is Kind.ABD:
                _decouple(state, r)
                state.rule = "deep decouple"
            elif r.kind is Kind.PROJECT:
                _project(state, r)
                state.rule = "deep project"
            else:
                _contract(state, r)
                state.rule = "deep contract"
            return state
        level = g.boxes[box].parent
        for door in list(g.boxes[box].why):
            tgt = g.dst_node(g.nodes[door].outs[0])
            if tgt is not None and tgt.kind is Kind.BANG and g.boxes[tgt.box].parent == level:
                _absorb(g, box, door)
                state.rule = "absorb"
                return state
        if g.boxes[box].why:
            raise NoRule(f"box {box} has ?-doors but no deep redex or absorbable box")
        t.flag = Flag.BANG
        state.changed = False
        state.rule = "close"
        return state
    if f is Flag.BANG:
        _bang(state)
        return state
    raise NoRule(f"no rewrite for flag {f.value}")


def _bang(state: MachineState) -> None:
    g = state.graph
    t = state.token
    p = g.src_node(t.position)
    assert p is not None and p.kind is Kind.BANG
    box = p.box
    li = p.ins[0]
    y = g.src_node(li)
    if y is not None and y.kind is Kind.DER:
        dl = y.ins[0]
        g.bypass(dl, t.position)
        g.remove_link(li)
        g.remove_node(y.id)
        b = g.boxes[box]
        for d in list(b.pwhy) + list(b.why):
            _merge_door(g, d)
        g.remove_node(p.id)
        _move_contents(g, box, b.parent)
        _remove_empty_box(g, box)
        t.position = dl
        t.flag = Flag.NONE
        state.rule = "open"
        return
    if y is not None and y.kind is Kind.CONTRACT:
        if not t.bstack:
            raise NoRule(f"box stack empty at contraction {y.id}")
        top = t.bstack[-1]
        if top not in y.ins:
            raise NoRule(f"box stack top {top} is not an input of contraction {y.id}")
        if len(y.ins) == 1:
            g.bypass(top, li)
            g.remove_node(y.id)
            t.bstack.pop()
            state.rule = "contract-1"
            return
        z = g.src_node(top)
        if z is not None and z.kind is Kind.CONTRACT:
            ins: list[int] = []
            for lid in y.ins:
                ins.extend(z.ins if lid == top else [lid])
            g.remove_link(top)
            g.remove_node(z.id)
            _set_inputs(g, y.id, ins)
            t.bstack.pop()
            state.rule = "contract-merge"
            return
        _set_inputs(g, y.id, [lid for lid in y.ins if lid != top])
        copy, _, _ = _refreshed_copy(state, box, g.boxes[box].parent)
        _plug_principal(g, copy, top)
        b, cb = g.boxes[box], g.boxes[copy]
        level = b.parent
        for d, cd in zip(b.why + b.pwhy, cb.why + cb.pwhy):
            dn = g.nodes[d]
            lo = dn.outs[0]
            fresh = g.new_link(g.links[lo].type)
            g.set_src(fresh, d, 0)
            kind = Kind.CONTRACT if dn.kind is Kind.WHY else Kind.PCONTRACT
            _share(g, kind, level, [fresh, g.nodes[cd].outs[0]], lo)
        t.bstack.pop()
        t.position = g.nodes[cb.principal].outs[0]
        state.rule = "copy"
        return
    t.flag = Flag.NONE
    state.changed = False
    state.rule = "enter"


def _unfold(g: Graph, pos: int, n: int) -> None:
    op = g.dst_node(pos)
    assert op is not None and op.kind is Kind.OP and op.value.iterated
    kind: OpKind = op.value
    a = kind.name
    v = Vec(a)
    simple = OpKind(Op.VADD if kind.op is Op.VSUM else Op.SMUL, a)
    cod = v if kind.op is Op.VSUM else FIELD
    fty = Arrow(v, cod)
    box = op.box
    left, right = op.outs
    g.remove_node(op.id)
    if n == 0:
        g.bypass(pos, right)
        g.new_node(Kind.CONTRACT, box, [], [left])
        return
    uses = []
    cur = pos
    for i in range(n):
        li = g.new_link(plain(cod))
        ri = right if i == n - 1 else g.new_link(plain(v))
        g.links[cur].dst = None
        g.new_node(Kind.OP, box, [cur], [li, ri], simple)
        fun = g.new_link(plain(fty))
        arg = g.new_link(bang(v))
        g.new_node(Kind.APPLY, box, [li], [fun, arg])
        u = g.new_link(bang(fty))
        g.new_node(Kind.DER, box, [fun], [u])
        uses.append(u)
        e = g.new_box(box)
        el = g.new_link(plain(v))
        g.boxes[e].principal = g.new_node(Kind.BANG, e, [arg], [el])
        g.new_node(Kind.VECTOR, e, [el], [], tuple(1.0 if j == i else 0.0 for j in range(n)))
        cur = ri
    c = g.new_node(Kind.CONTRACT, box, uses, [])
    g.nodes[c].outs.append(left)
    g.links[left].src = (c, 0)


# ---------------------------------------------------------------------------
# Execution

Observer = Callable[[MachineState], None]


def step(state: MachineState) -> MachineState:
    state.changed = False
    if state.token.flag is Flag.NONE:
        state.kind = "pass"
        pass_step(state)
    else:
        state.kind = "rewrite"
        rewrite_step(state)
    state.steps += 1
    return state


def run(
    graph: Graph,
    max_steps: int = 10**6,
    gc: bool = False,
    seed: Optional[int] = None,
    observer: Optional[Observer] = None,
    state: Optional[MachineState] = None,
) -> Outcome:
    """Execute from the initial state until a final state, the step limit, or a stuck state."""
    from .gc import collect_around

    if state is None:
        try:
            state = init_state(graph, seed)
        except NotComposite as e:
            raise ValueError(str(e)) from e
    if observer is not None:
        state.kind, state.rule = "init", "init"
        observer(state)
    while True:
        if is_final(state):
            return Final(state.graph, state.token.cstack[-1], state.steps, state)
        if state.steps >= max_steps:
            return StepLimit(state)
        try:
            step(state)
        except NoRule as e:
            return Stuck(state, _diagnose(state, str(e)))
        if observer is not None:
            observer(state)
        if gc and state.changed and state.token.flag is Flag.NONE:
            if collect_around(state) and observer is not None:
                state.kind, state.rule = "gc", "gc"
                observer(state)


def _diagnose(state: MachineState, msg: str) -> str:
    t = state.token
    stack = ", ".join(format_value(x) for x in t.cstack[1:])
    return f"{msg} [step {state.steps}, link {t.position}, {t.direction}, flag {t.flag_text()}, stack [{stack}]]"
