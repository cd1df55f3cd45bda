from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abdgoi.generator import generate
from abdgoi.syntax import FIELD, Arrow, PrimOp, Vec, parse, subterms
from abdgoi.typecheck import TypeErrorAt, type_of, typecheck

from conftest import SMALL, corpus_source


def summary(src: str) -> str:
    return typecheck(parse(src)).summary()


def test_judgement_summary_lists_parameters():
    assert summary(corpus_source("ex1")) == "type F, params [1]"
    assert summary("fun (x : F) -> x") == "type F -> F, params []"
    assert summary("{1} + {2.5}") == "type F, params [1, 2.5]"


def test_unbound_variable():
    with pytest.raises(TypeErrorAt, match="unbound"):
        typecheck(parse("x + 1"))


def test_scalar_applied_as_function():
    with pytest.raises(TypeErrorAt):
        typecheck(parse(corpus_source("bad")))


def test_vector_name_cannot_escape_its_decoupling():
    with pytest.raises(TypeErrorAt, match="escapes"):
        typecheck(parse("let f @ p = {1} in p"))


def test_dot_product_infers_vector_space():
    j = typecheck(parse("let f @ p = {1} in p . p"))
    assert j.type == FIELD
    dots = [t for t in subterms(j.subject) if isinstance(t, PrimOp) and t.op == "."]
    assert len(dots) == 1 and dots[0].kind.name is not None


def test_decoupled_function_model():
    j = typecheck(parse("let g @ q = fun (x : F) -> {2} * x in g q 3"))
    assert j.type == FIELD and j.params == (2.0,)


def test_unresolvable_dot_is_rejected():
    with pytest.raises(TypeErrorAt):
        typecheck(parse("fun x -> x . x"))


@pytest.mark.parametrize("name", SMALL + ["ex6a", "ex6b"])
def test_corpus_types_to_field(name):
    j = typecheck(parse(corpus_source(name)))
    assert j.type == FIELD
    assert type_of(j.subject, {}) == j.type


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=2**32))
def test_generated_terms_are_well_typed(seed):
    j = typecheck(generate(random.Random(seed)))
    assert j.type == FIELD
    assert type_of(j.subject, {}) == FIELD


def test_arrow_and_vector_rendering():
    assert str(Arrow(FIELD, Arrow(FIELD, FIELD))) == "F -> F -> F"
    assert str(Arrow(Arrow(FIELD, FIELD), FIELD)) == "(F -> F) -> F"
    assert isinstance(Vec(parse("let f @ p = 1 in 0").fun.name), Vec)
