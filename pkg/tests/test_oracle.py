from __future__ import annotations

import math

import pytest

from abdgoi.oracle import Cell, Model, SymNode, VecVal, eval_direct, fdiv, readout, subst
from abdgoi.syntax import Op, parse
from abdgoi.typecheck import typecheck

from conftest import EXPECTED, SMALL, corpus_source


def oracle(src: str):
    return eval_direct(typecheck(parse(src)).subject)


@pytest.mark.parametrize("name", SMALL)
def test_corpus_values(name):
    assert oracle(corpus_source(name)).readout == EXPECTED[name]


def test_sharing_gives_one_parameter():
    assert oracle("let f @ p = (fun x -> x + x) {1} in p . p").readout == 1.0
    assert oracle("let f @ p = {1} + {1} in p . p").readout == 2.0


def test_cell_count_is_leaf_count():
    assert oracle("{1} + {2} * {3}").cells == 3
    assert oracle("1 + 2").cells == 0


def test_provisional_arithmetic_stays_symbolic():
    r = oracle("{1} + 2")
    assert isinstance(r.value, SymNode)
    assert r.readout == 3.0


def test_vector_and_function_readouts():
    assert oracle("fun (x : F) -> x").readout == "λ"
    assert oracle("let f @ p = {1} + {2} in f (3 * p)").readout == 9.0


def test_model_replays_with_substituted_cells():
    m = Model(SymNode(Op.MUL, (Cell(0, 2.0), 5.0)), (0,))
    out = subst(m.value, {0: 3.0})
    assert out == 15.0
    assert readout(VecVal((Cell(0, 2.0), 1.0))) == [2.0, 1.0]


def test_division_by_zero():
    assert fdiv(1.0, 0.0) == math.inf
    assert fdiv(-1.0, 0.0) == -math.inf
    assert math.isnan(fdiv(0.0, 0.0))


def test_iterated_sum_is_a_right_fold():
    # vsum (fun e -> (e . p) * e) (0 * p) over p = [2, 3] is [2, 3]
    r = oracle("let f @ p = {2} + {3} in (vsum (fun e -> (e . p) * e) (0 * p)) . p")
    assert r.readout == 13.0


def test_deep_decoupling_through_free_variable():
    assert oracle(corpus_source("ex2")).readout == 13.0
