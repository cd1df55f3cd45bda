from __future__ import annotations

from collections import Counter

import pytest

from abdgoi.criteria import check_criteria
from abdgoi.graph import PROV, Kind, check_wellformed, decompose_composite
from abdgoi.syntax import FIELD, parse
from abdgoi.translate import compile_source, translate
from abdgoi.typecheck import typecheck

from conftest import LEARNING, SMALL, compile_named


def kinds(src: str) -> Counter:
    _, g = compile_source(src)
    return Counter(n.kind for n in g.nodes.values())


def test_provisional_constant_sits_over_the_parameter_row():
    _, g = compile_source("{1} + 2")
    c = Counter(n.kind for n in g.nodes.values())
    assert c[Kind.PDER] == 1 and c[Kind.PBANG] == 1 and c[Kind.OP] == 1 and c[Kind.SCALAR] == 2
    assert len(g.row) == 1
    pder = next(n for n in g.nodes.values() if n.kind is Kind.PDER)
    assert g.links[pder.outs[0]].type == PROV
    assert g.dst_node(pder.outs[0]).kind is Kind.PBANG


def test_unused_variable_is_weakened():
    _, g = compile_source("fun (x : F) -> 1")
    lam = next(n for n in g.nodes.values() if n.kind is Kind.LAMBDA)
    c = g.src_node(lam.ins[1])
    assert c.kind is Kind.CONTRACT and c.ins == []


def test_shared_variable_is_contracted():
    _, g = compile_source("fun (x : F) -> x + x")
    lam = next(n for n in g.nodes.values() if n.kind is Kind.LAMBDA)
    c = g.src_node(lam.ins[1])
    assert c.kind is Kind.CONTRACT and len(c.ins) == 2


def test_argument_is_boxed_with_doors_for_free_variables():
    _, g = compile_source("(fun (y : F) -> fun (x : F) -> (fun (z : F) -> z) (x + y)) 1 2")
    assert kinds("(fun (z : F) -> z) 3")[Kind.BANG] == 1
    inner = [b for b in g.boxes.values() if len(b.why) == 2]
    assert len(inner) == 1


def test_provisional_door_for_boxed_constant():
    _, g = compile_source("(fun (z : F) -> z) {3}")
    (b,) = g.boxes.values()
    assert len(b.pwhy) == 1 and not b.why


def test_iterated_operation_boxes_its_function():
    c = kinds("let f @ p = {1} in (vsum (fun e -> e) p) . p")
    assert c[Kind.OP] == 2 and c[Kind.ABD] == 1


def test_decoupling_shape():
    _, g = compile_named("ex1")
    abd = next(n for n in g.nodes.values() if n.kind is Kind.ABD)
    lam = g.dst_node(abd.outs[0])
    assert lam.kind is Kind.LAMBDA and lam.ins[1] == abd.outs[0]
    assert g.dst_node(lam.outs[0]).kind is Kind.DER


def test_open_judgements_are_rejected():
    j = typecheck(parse("x"), (("x", FIELD),))
    with pytest.raises(ValueError):
        translate(j)


@pytest.mark.parametrize("name", SMALL + LEARNING)
def test_corpus_translations_are_valid(name):
    j, g = compile_named(name)
    assert check_wellformed(g) == []
    errs, vmap = check_criteria(g)
    assert errs == [] and vmap == {}
    assert tuple(decompose_composite(g).params) == j.params
