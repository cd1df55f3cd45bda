from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abdgoi.graph import Kind, decompose_composite
from abdgoi.machine import (
    AT,
    BOTTOM,
    LAM,
    STAR,
    Final,
    Flag,
    NoRule,
    StepLimit,
    Stuck,
    format_value,
    init_state,
    pass_step,
    rewrite_step,
    run,
    step,
)
from abdgoi.translate import compile_source

from conftest import EXPECTED, SMALL, compile_named


def final(src: str, **kw) -> Final:
    _, g = compile_source(src)
    out = run(g, **kw)
    assert isinstance(out, Final), out
    return out


def rules(src: str) -> list[str]:
    _, g = compile_source(src)
    seen: list[str] = []
    run(g, observer=lambda s: seen.append(s.rule))
    return seen


@pytest.mark.parametrize("name", SMALL)
def test_corpus_results(name):
    _, g = compile_named(name)
    out = run(g)
    assert isinstance(out, Final)
    assert out.result == EXPECTED[name]


def test_initial_state():
    _, g = compile_source("{1} + 2")
    s = init_state(g)
    t = s.token
    assert t.up and t.flag is Flag.NONE and t.position == g.root
    assert t.cstack == [BOTTOM, STAR] and t.bstack == []
    assert s.params == (1.0,)


def test_first_pass_enters_the_right_operand():
    _, g = compile_source("{1} + 2")
    s = init_state(g)
    op = g.dst_node(g.root)
    pass_step(s)
    assert s.token.cstack == [BOTTOM, STAR, STAR]
    assert s.token.position == op.outs[1]


def test_pass_rules_need_a_clear_flag():
    _, g = compile_source("1")
    s = init_state(g)
    s.token.flag = Flag.BANG
    with pytest.raises(NoRule):
        pass_step(s)


def test_lambda_application_pair_is_eliminated():
    _, g = compile_source("(fun (x : F) -> x) 3")
    s = init_state(g)
    while s.token.flag is not Flag.LAMBDA:
        step(s)
    before = (g.count(Kind.LAMBDA), g.count(Kind.APPLY), len(g.links))
    rewrite_step(s)
    assert (g.count(Kind.LAMBDA), g.count(Kind.APPLY)) == (before[0] - 1, before[1] - 1)
    assert len(g.links) == before[2] - 3
    assert s.token.flag is Flag.NONE and s.token.up


def test_simple_operation_over_constants_collapses():
    out = final("1 + 2")
    assert out.result == 3.0
    consts = [n for n in out.graph.nodes.values() if n.kind is Kind.SCALAR]
    assert [c.value for c in consts] == [3.0]


def test_provisional_operand_is_not_rewritten_out():
    _, g = compile_source("{1} + 2")
    s = init_state(g)
    while s.token.flag is not Flag.OP0:
        step(s)
    assert s.token.cstack[-1] == 3.0 and not s.token.up
    nodes = set(g.nodes)
    rewrite_step(s)
    assert set(g.nodes) == nodes and s.token.flag is Flag.NONE
    assert s.rule == "rewrite $0 keep"


def test_single_surviving_parameter():
    out = final("{1} + 2")
    assert out.result == 3.0
    assert out.graph.count(Kind.PBANG) == 1


def test_empty_fold_uses_the_base_argument():
    seen = rules("let f @ p = 5 in (vsum (fun e -> e) p) . p")
    assert "rewrite $1 unfold 0" in seen
    assert final("let f @ p = 5 in (vsum (fun e -> e) p) . p").result == 0.0


def test_unfolding_materialises_basis_vectors():
    _, g = compile_source("let f @ p = {1} + {2} + {3} in (vsum (fun e -> e) p) . p")
    s = init_state(g)
    while s.token.flag is not Flag.OP1:
        step(s)
    assert s.token.n == 3
    rewrite_step(s)
    bases = sorted(n.value for n in g.nodes.values() if n.kind is Kind.VECTOR and sum(n.value) == 1.0)
    assert (0.0, 0.0, 1.0) in bases and (1.0, 0.0, 0.0) in bases


def test_function_result_reads_as_lambda():
    out = final("fun (x : F) -> x")
    assert out.result == LAM and format_value(out.result) == "λ"


def test_step_limit():
    _, g = compile_named("ex2")
    out = run(g, max_steps=10)
    assert isinstance(out, StepLimit) and out.state.steps == 10


def test_stuck_reports_a_diagnostic():
    _, g = compile_source("fun (x : F) -> x")
    s = init_state(g)
    s.token.cstack[-1] = 5.0
    out = run(g, state=s)
    assert isinstance(out, Stuck)
    assert "λ-node" in out.diagnostic and "step 0" in out.diagnostic


def test_format_value():
    assert format_value(3.0) == "3"
    assert format_value(2.5) == "2.5"
    assert format_value((1.0, 0.5)) == "[1, 0.5]"
    assert format_value(AT) == "@"


@pytest.mark.parametrize("name", SMALL)
def test_arguments_are_evaluated_before_functions(name):
    _, g = compile_named(name)
    first: dict[tuple[int, str], int] = {}

    def watch(s):
        if s.rule in ("pass-up @", "pass-down @"):
            app = s.graph.src_node(s.token.position)
            side = "arg" if s.rule == "pass-up @" else "fun"
            first.setdefault((app.id, side), s.steps)

    run(g, observer=watch)
    apps = {a for a, _ in first}
    assert apps
    for a in apps:
        assert first[(a, "arg")] < first.get((a, "fun"), float("inf"))


@pytest.mark.parametrize("name", SMALL)
def test_parameter_row_is_preserved(name):
    j, g = compile_named(name)
    rows: set[tuple] = set()
    run(g, observer=lambda s: rows.add(tuple(decompose_composite(s.graph).params)))
    assert rows == {j.params}


def foldr_reference(op: str, a: float, b: float, c: float, p: list[float]) -> float:
    n = len(p)
    acc = [0.0] * n
    for i in reversed(range(n)):
        e = [1.0 if j == i else 0.0 for j in range(n)]
        ep = sum(x * y for x, y in zip(e, p))
        if op == "vsum":
            fe = [(a * ep + b) * x + c * y for x, y in zip(e, p)]
            acc = [x + y for x, y in zip(fe, acc)]
        else:
            acc = [(a * ep + b) * y for y in acc] if i < n - 1 else [(a * ep + b) * (c * y) for y in p]
    if op == "vscale" and n == 0:
        acc = []
    dot = 0.0
    for x, y in zip(acc, p):
        dot = dot + x * y
    return dot


def lit(x: float) -> str:
    return f"({x})" if x < 0 else str(x)


def iterated_program(op: str, a: float, b: float, c: float, p: list[float]) -> str:
    """Decouple one parameter per provisional leaf, then fold over the basis of their space."""
    params = " + ".join(f"{{{v}}}" for v in p)
    a, b, c = lit(a), lit(b), lit(c)
    if op == "vsum":
        body = f"(vsum (fun e -> ({a} * (e . q) + {b}) * e + {c} * q) (0 * q)) . q"
    else:
        body = f"(vscale (fun e -> {a} * (e . q) + {b}) ({c} * q)) . q"
    return f"let f @ q = {params} in {body}"


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from(["vsum", "vscale"]),
    st.integers(-3, 3),
    st.integers(-3, 3),
    st.integers(-3, 3),
    st.lists(st.integers(-4, 4), min_size=1, max_size=5),
)
def test_iterated_operations_match_the_fold(op, a, b, c, p):
    src = iterated_program(op, a, b, c, p)
    got = final(src).result
    ref = foldr_reference(op, a, b, c, [float(x) for x in p])
    assert abs(got - ref) <= 1e-12 * max(1.0, abs(ref))
