"""Garbage collection: removal of weakened boxes and weakening chains.

Collection only runs between steps with the flag at ``□`` and never touches
the token position, links recorded on the box stack, or the parameter row.
"""

from __future__ import annotations

from collections import deque
from typing import TYPE_CHECKING

from .graph import Graph, Kind

if TYPE_CHECKING:
    from .machine import MachineState

_WEAK = (Kind.CONTRACT, Kind.PCONTRACT, Kind.PROJECT)


def _is_weakening(g: Graph, nid: int) -> bool:
    n = g.nodes.get(nid)
    return n is not None and n.kind in _WEAK and not n.ins


def _protected(state: "MachineState") -> set[int]:
    return {state.token.position, *state.token.bstack}


def _collect_one(state: "MachineState", nid: int, protected: set[int], made: list[int]) -> bool:
    """Try one collection rule on the zero-input sharing node ``nid``."""
    from .machine import _delete_box, _set_inputs

    g = state.graph
    w = g.nodes[nid]
    out = w.outs[0]
    if out in protected:
        return False
    tgt = g.dst_node(out)
    if tgt is None:
        return False
    if tgt.kind is Kind.BANG:
        box = g.boxes[tgt.box]
        if box.why or box.pwhy:
            return False  # only closed boxes; provisional doors may still count for a decoupling
        inner = set(g.box_nodes(box.id))
        for lid in protected:
            l = g.links.get(lid)
            if l is not None and ((l.src and l.src[0] in inner) or (l.dst and l.dst[0] in inner)):
                return False
        if any(r in inner for r in g.row):
            return False
        level = box.parent
        outer = [(Kind.CONTRACT, g.nodes[d].outs[0]) for d in box.why]
        g.remove_node(nid)
        g.remove_link(out)
        _delete_box(g, box.id, {lo for _, lo in outer})
        for kind, lo in outer:
            made.append(g.new_node(kind, level, [], [lo]))
        return True
    if w.kind is Kind.PROJECT:
        return False
    want = Kind.CONTRACT if w.kind is Kind.CONTRACT else Kind.PCONTRACT
    if tgt.kind is want:
        g.remove_node(nid)
        _set_inputs(g, tgt.id, [lid for lid in tgt.ins if lid != out])
        g.remove_link(out)
        if not tgt.ins:
            made.append(tgt.id)
        elif len(tgt.ins) == 1:
            _wire(g, tgt.id, protected)
        return True
    return False


def _wire(g: Graph, nid: int, protected: set[int]) -> None:
    """Replace a one-input sharing node by a plain link, keeping protected link ids."""
    n = g.nodes[nid]
    i, o = n.ins[0], n.outs[0]
    if i in protected and o in protected:
        return
    g.remove_node(nid)
    if o in protected:
        g.bypass_up(o, i)
    else:
        g.bypass(i, o)


def _run(state: "MachineState", pending: set[int]) -> bool:
    g = state.graph
    protected = _protected(state)
    changed = False
    queue = deque(sorted(pending))
    stuck: set[int] = set()
    while queue:
        nid = queue.popleft()
        if not _is_weakening(g, nid):
            continue
        made: list[int] = []
        if _collect_one(state, nid, protected, made):
            changed = True
            queue.extend(made)
        else:
            stuck.add(nid)
    pending.clear()
    pending.update(n for n in stuck if _is_weakening(g, n))
    return changed


def collect(state: "MachineState") -> bool:
    """Collect garbage to a fixpoint by a full scan.  Returns whether anything changed."""
    g = state.graph
    any_change = False
    while True:
        pending = {nid for nid in g.nodes if _is_weakening(g, nid)}
        if not _run(state, pending):
            return any_change
        any_change = True


def collect_around(state: "MachineState") -> bool:
    """Incremental collection, looking only at weakenings created since the last call."""
    g = state.graph
    pending = state.gc_pending
    top = g.fresh_id()
    for nid in range(state.gc_mark, top):
        if _is_weakening(g, nid):
            pending.add(nid)
    changed = _run(state, pending)
    state.gc_mark = g.fresh_id()
    return changed


def garbage_nodes(g: Graph) -> set[int]:
    """Nodes not reachable from the root by box-paths, nor part of the parameter row."""
    from .graph import box_successors

    seen: set[int] = set()
    queue = deque(g.inputs)
    while queue:
        lid = queue.popleft()
        if lid in seen:
            continue
        seen.add(lid)
        queue.extend(box_successors(g, lid))
    live: set[int] = set(g.row)
    for lid in seen:
        l = g.links[lid]
        for end in (l.src, l.dst):
            if end is not None:
                live.add(end[0])
    return {nid for nid in g.nodes if nid not in live}
