from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abdgoi.generator import generate
from abdgoi.syntax import (
    Abd,
    Abs,
    App,
    Const,
    PrimOp,
    Prov,
    SyntaxErrorAt,
    Var,
    alpha_equal,
    parse,
    pretty,
    prov_values,
    tokenize,
)


def test_tokenize_kinds():
    toks = tokenize("{1} . p -> λ")
    assert [(t.kind, t.text) for t in toks] == [
        ("sym", "{"),
        ("num", "1"),
        ("sym", "}"),
        ("dot", "."),
        ("ident", "p"),
        ("sym", "->"),
        ("sym", "λ"),
        ("eof", ""),
    ]


def test_let_desugars_to_application_of_abstraction():
    t = parse("let x = 1 in x")
    assert t == App(Abs("x", None, Var("x")), Const(1.0))


def test_let_with_parameters_builds_curried_function():
    t = parse("let f a b = a in f")
    assert isinstance(t, App)
    assert t.arg == Abs("a", None, Abs("b", None, Var("a")))


def test_decoupling_let_desugars_to_abd():
    t = parse("let f @ p = {1} + 2 in f p")
    assert isinstance(t, App) and isinstance(t.fun, Abd)
    assert (t.fun.f, t.fun.x) == ("f", "p")
    assert t.arg == PrimOp("+", Prov(1.0), Const(2.0))


def test_precedence_and_associativity():
    assert parse("1 + 2 * 3") == PrimOp("+", Const(1.0), PrimOp("*", Const(2.0), Const(3.0)))
    assert parse("1 - 2 - 3") == PrimOp("-", PrimOp("-", Const(1.0), Const(2.0)), Const(3.0))
    assert parse("f a b") == App(App(Var("f"), Var("a")), Var("b"))


def test_negative_constants():
    assert parse("(-3)") == Const(-3.0)
    assert parse("{-2}") == Prov(-2.0)


def test_iterated_operations_take_two_atoms():
    t = parse("vsum (fun e -> e) p")
    assert t == PrimOp("vsum", Abs("e", None, Var("e")), Var("p"))


def test_comments_are_ignored():
    assert parse("# a note\n1") == Const(1.0)


def test_syntax_error_has_position():
    with pytest.raises(SyntaxErrorAt) as e:
        parse("let x = in 3")
    assert (e.value.line, e.value.col) == (1, 9)


def test_prov_values_in_order():
    assert prov_values(parse("{1} + {2} * {3}")) == [1.0, 2.0, 3.0]


def test_alpha_equal_ignores_decoupling_names():
    a = parse("let f @ p = {1} in f p")
    b = parse("let f @ p = {1} in f p")
    assert a.fun.name != b.fun.name
    assert alpha_equal(a, b)
    assert not alpha_equal(a, parse("let f @ p = {2} in f p"))


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=2**32))
def test_pretty_then_parse_round_trips(seed):
    t = generate(random.Random(seed))
    assert alpha_equal(parse(pretty(t)), t)
