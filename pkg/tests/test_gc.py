from __future__ import annotations

import pytest

from abdgoi.gc import collect, garbage_nodes
from abdgoi.graph import Graph, Kind, bang, check_wellformed, plain
from abdgoi.machine import Final, init_state, run
from abdgoi.syntax import FIELD
from abdgoi.translate import compile_source

from conftest import EXPECTED, SMALL, compile_named


def chain_graph() -> tuple[Graph, dict[str, int]]:
    """root -> D -> C_2 -> !-box, where the other C_2 input is a weakening C_0."""
    g = Graph()
    root = g.new_link(plain(FIELD))
    g.inputs = [root]
    used = g.new_link(bang(FIELD))
    dead = g.new_link(bang(FIELD))
    shared = g.new_link(bang(FIELD))
    g.new_node(Kind.DER, None, [root], [used])
    g.new_node(Kind.CONTRACT, None, [], [dead])
    g.new_node(Kind.CONTRACT, None, [used, dead], [shared])
    b = g.new_box(None)
    inner = g.new_link(plain(FIELD))
    g.boxes[b].principal = g.new_node(Kind.BANG, b, [shared], [inner])
    g.new_node(Kind.SCALAR, b, [inner], [], 7.0)
    return g, {"root": root, "used": used, "shared": shared}


def test_weakening_chain_collapses_to_a_wire():
    g, ls = chain_graph()
    s = init_state(g)
    assert collect(s)
    assert g.count(Kind.CONTRACT) == 0
    assert g.dst_node(ls["used"]).kind is Kind.BANG
    assert check_wellformed(g) == []
    assert not collect(s)


def test_protected_link_keeps_its_identity():
    g, ls = chain_graph()
    s = init_state(g)
    s.token.bstack.append(ls["shared"])
    collect(s)
    assert ls["shared"] in g.links
    assert g.src_node(ls["shared"]).kind is Kind.DER


def test_weakened_closed_box_is_deleted():
    _, g = compile_source("(fun (x : F) -> 3) 4")
    plain_run = run(g.clone())
    gc_run = run(g.clone(), gc=True)
    assert plain_run.result == gc_run.result == 3.0
    assert len(plain_run.graph.boxes) == 1
    assert len(gc_run.graph.boxes) == 0


def test_boxes_with_provisional_doors_are_kept():
    _, g = compile_named("ex4a")
    out = run(g, gc=True)
    assert out.result == 1.0


@pytest.mark.parametrize("name", SMALL)
def test_collection_is_transparent_and_idempotent(name):
    _, g = compile_named(name)
    a = run(g.clone())
    b = run(g.clone(), gc=True)
    assert isinstance(a, Final) and isinstance(b, Final)
    assert a.result == b.result == EXPECTED[name]
    rows = b.graph.count(Kind.PBANG)
    collect(b.state)
    assert not collect(b.state)
    assert b.graph.count(Kind.PBANG) == rows
    assert check_wellformed(b.graph) == []


def test_garbage_marking():
    _, g = compile_source("(fun (x : F) -> 3) 4")
    out = run(g)
    dead = garbage_nodes(out.graph)
    assert {out.graph.nodes[n].kind for n in dead} >= {Kind.BANG, Kind.SCALAR}
    assert not any(out.graph.nodes[n].kind is Kind.PBANG for n in dead)
