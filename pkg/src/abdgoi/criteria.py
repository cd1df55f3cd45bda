"""Executable validity criteria: names, validation map, graph shape, valid states."""

from __future__ import annotations

from collections import deque
from typing import TYPE_CHECKING, Iterable, Optional

from .graph import PROV, Graph, Kind, box_successors
from .syntax import Arrow, Field, Name, Vec, type_names

if TYPE_CHECKING:
    from .machine import MachineState

ValidationMap = dict[Name, int]


def bound_names(g: Graph) -> dict[Name, list[int]]:
    out: dict[Name, list[int]] = {}
    for n in g.nodes.values():
        if n.kind is Kind.ABD:
            t = g.links[n.ins[1]].type.type
            if isinstance(t, Vec):
                out.setdefault(t.name, []).append(n.id)
    return out


def validation_map(g: Graph) -> tuple[list[str], ValidationMap]:
    errs: list[str] = []
    vmap: ValidationMap = {}

    def claim(a: Name, n: int, who: str) -> None:
        if a in vmap and vmap[a] != n:
            errs.append(f"free-name: {who} gives {a} dimension {n}, elsewhere {vmap[a]}")
        else:
            vmap.setdefault(a, n)

    for n in g.nodes.values():
        if n.kind is Kind.VECTOR:
            t = g.links[n.ins[0]].type.type
            if isinstance(t, Vec):
                claim(t.name, len(n.value), f"vector constant {n.id}")
        elif n.kind is Kind.PROJECT:
            t = g.links[n.outs[0]].type.type
            if isinstance(t, Vec):
                claim(t.name, len(n.ins), f"projection {n.id}")
    return errs, vmap


def _name_errors(g: Graph, vmap: ValidationMap) -> list[str]:
    errs: list[str] = []
    bound = bound_names(g)
    for a, nodes in bound.items():
        if len(nodes) > 1:
            errs.append(f"bound-name: {a} is bound by {len(nodes)} decoupling nodes {sorted(nodes)}")
        if a in vmap:
            errs.append(f"bound-name: {a} is both bound and free")
    for lid in g.inputs:
        for a in type_names(g.links[lid].type.type):
            if a in bound:
                errs.append(f"bound-name: {a} appears on input link {lid}")
    boxed = {a: g.nodes[ns[0]].box for a, ns in bound.items() if g.nodes[ns[0]].box is not None}
    if boxed:
        for l in g.links.values():
            for a in type_names(l.type.type):
                b = boxed.get(a)
                if b is not None and not g.inside(g.link_level(l.id), b):
                    errs.append(f"bound-name: {a} escapes the box of its decoupling node on link {l.id}")
    return errs


def _has_cycle(starts: Iterable[int], succ) -> Optional[int]:
    colour: dict[int, int] = {}
    for s in starts:
        if s in colour:
            continue
        stack = [(s, iter(succ(s)))]
        colour[s] = 1
        while stack:
            v, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                colour[v] = 2
                stack.pop()
                continue
            c = colour.get(nxt, 0)
            if c == 1:
                return nxt
            if c == 0:
                colour[nxt] = 1
                stack.append((nxt, iter(succ(nxt))))
    return None


def _acyclicity_errors(g: Graph) -> list[str]:
    errs = []
    arg = [l.id for l in g.links.values() if l.type.mode == "bang"]

    def arg_succ(lid: int):
        return [m for m in box_successors(g, lid) if g.links[m].type.mode == "bang"]

    c = _has_cycle(arg, arg_succ)
    if c is not None:
        errs.append(f"acyclicity: argument-typed box-path cycle through link {c}")
    prov = [l.id for l in g.links.values() if l.type == PROV]

    def prov_succ(lid: int):
        n = g.dst_node(lid)
        return [] if n is None else [m for m in n.outs if g.links[m].type == PROV]

    c = _has_cycle(prov, prov_succ)
    if c is not None:
        errs.append(f"acyclicity: provisional path cycle through link {c}")
    return errs


def _reachable(g: Graph, blocked: set[int]) -> set[int]:
    seen: set[int] = set()
    queue = deque(l for l in g.inputs if l not in blocked)
    while queue:
        lid = queue.popleft()
        if lid in seen:
            continue
        seen.add(lid)
        for m in box_successors(g, lid):
            if m not in blocked and m not in seen:
                queue.append(m)
    return seen


def _covering_errors(g: Graph) -> list[str]:
    errs = []
    for n in g.nodes.values():
        if n.kind is Kind.LAMBDA:
            if n.ins[1] in _reachable(g, {n.ins[0]}):
                errs.append(f"covering: variable link of λ-node {n.id} is not covered by its input")
    why_outs = {g.nodes[d].outs[0] for b in g.boxes.values() for d in b.why}
    seen = _reachable(g, why_outs)
    for n in g.nodes.values():
        if n.kind in (Kind.ABD, Kind.PROJECT) and any(l in seen for l in n.ins):
            errs.append(f"covering: {n.label()}-node {n.id} is not covered by a ?-node")
    return errs


def check_criteria(g: Graph) -> tuple[list[str], Optional[ValidationMap]]:
    """Diagnostics for the name and graph criteria, and the validation map if it exists."""
    verrs, vmap = validation_map(g)
    errs = list(verrs)
    errs += _name_errors(g, vmap)
    errs += _acyclicity_errors(g)
    errs += _covering_errors(g)
    return errs, (None if verrs else vmap)


# ---------------------------------------------------------------------------
# Queries and answers

def is_query(x, ty) -> bool:
    from .machine import AT, STAR

    t = ty.type
    if isinstance(t, Arrow) and ty.mode != "prov":
        return x == STAR or x == AT
    return x == STAR


def is_answer(x, ty, vmap: ValidationMap) -> bool:
    from .machine import LAM

    t = ty.type
    if isinstance(t, Field):
        return isinstance(x, float)
    if isinstance(t, Vec):
        return isinstance(x, tuple) and t.name in vmap and len(x) == vmap[t.name]
    return x == LAM


def answers_exist(ty, vmap: ValidationMap) -> bool:
    t = ty.type
    return not isinstance(t, Vec) or t.name in vmap


def valid_state(state: "MachineState", graph_checks: bool = True) -> list[str]:
    """Diagnostics for the valid-state predicate; empty when the state is valid."""
    g = state.graph
    errs: list[str] = []
    vmap: ValidationMap
    if graph_checks:
        errs, found = check_criteria(g)
        vmap = found or {}
    else:
        vmap = validation_map(g)[1]
    tok = state.token
    if tok.position not in g.links:
        return errs + [f"token position {tok.position} is not a live link"]
    ty = g.links[tok.position].type
    if len(tok.cstack) < 2:
        return errs + ["computation stack is empty"]
    top = tok.cstack[-1]
    if tok.up:
        if not is_query(top, ty):
            errs.append(f"token: {top!r} is not a query for type {ty}")
    else:
        if not answers_exist(ty, vmap):
            errs.append(f"token: no answers exist for type {ty}")
        elif not is_answer(top, ty, vmap):
            errs.append(f"token: {top!r} is not an answer for type {ty}")
    return errs
