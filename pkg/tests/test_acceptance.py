"""The nine acceptance criteria, one test each.

A one-line pass/fail summary per criterion is printed at the end of the run
(see ``pytest_terminal_summary`` in conftest.py).
"""

from __future__ import annotations

import copy
import math
import random
import time

import pytest

from abdgoi.cli import validate_graph
from abdgoi.gc import collect
from abdgoi.generator import Limits, decoupling_nesting, depth, generate_corpus
from abdgoi.graph import Kind, canonical, decompose_composite
from abdgoi.machine import Final, Flag, MachineState, run
from abdgoi.oracle import eval_direct
from abdgoi.syntax import prov_values
from abdgoi.translate import translate
from abdgoi.typecheck import typecheck

from conftest import EXPECTED, LEARNING, SMALL, compile_named
from test_machine import final, foldr_reference, iterated_program

CORPUS = SMALL + LEARNING
GENERATED = 1000
SEEDED = 100
SEEDS = range(20)
MAX_STEPS = 10**6


def same(a: object, b: object) -> bool:
    if isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b):
        return True
    return a == b


def close(a: float, b: float, tol: float) -> bool:
    if math.isnan(a) or math.isnan(b):
        return math.isnan(a) and math.isnan(b)
    return math.isclose(a, b, rel_tol=tol, abs_tol=tol)


@pytest.fixture(scope="session")
def judgements():
    """The generated corpus, type-checked."""
    return [typecheck(t) for t in generate_corpus(GENERATED, seed=0)]


@pytest.fixture(scope="session")
def outcomes(judgements):
    return [run(translate(j), max_steps=MAX_STEPS) for j in judgements]


def corpus_graph(name: str):
    return compile_named(name)[1]


# ---------------------------------------------------------------------------


def test_criterion_1_example_values():
    for name in SMALL:
        g = corpus_graph(name)
        t0 = time.perf_counter()
        out = run(g)
        elapsed = time.perf_counter() - t0
        assert isinstance(out, Final), (name, out)
        assert abs(out.result - EXPECTED[name]) <= 1e-12, (name, out.result)
        assert elapsed < 1.0, (name, elapsed)
    assert EXPECTED["ex4a"] != EXPECTED["ex4b"]


def test_criterion_2_generated_programs_terminate(judgements, outcomes):
    lim = Limits()
    assert len(judgements) == GENERATED
    for j, out in zip(judgements, outcomes):
        t = j.subject
        assert depth(t) <= lim.depth
        assert len(prov_values(t)) <= lim.provs
        assert decoupling_nesting(t) <= lim.decouplings
        assert isinstance(out, Final), out
        assert out.steps <= MAX_STEPS


def _determinism_cases(judgements):
    for name in CORPUS:
        yield name, lambda name=name: corpus_graph(name)
    for i, j in enumerate(judgements[:SEEDED]):
        yield f"generated {i}", lambda j=j: translate(j)


def test_criterion_3_determinism(judgements):
    for label, make in _determinism_cases(judgements):
        ref = run(make())
        assert isinstance(ref, Final), label
        shape = canonical(ref.graph)
        for seed in SEEDS:
            out = run(make(), seed=seed)
            assert isinstance(out, Final), (label, seed)
            assert same(out.result, ref.result), (label, seed, out.result, ref.result)
            assert canonical(out.graph) == shape, (label, seed)


def _collect_is_idempotent(state: MachineState) -> None:
    s = copy.deepcopy(state)
    before = s.graph.param_values()
    collect(s)
    assert s.graph.param_values() == before
    assert not collect(s)
    assert s.graph.param_values() == before


def test_criterion_4_gc_transparency(judgements, outcomes):
    for name in CORPUS:
        off = run(corpus_graph(name))
        on = run(corpus_graph(name), gc=True)
        assert isinstance(off, Final) and isinstance(on, Final), name
        assert same(off.result, on.result), (name, off.result, on.result)
    for j, off in zip(judgements, outcomes):
        on = run(translate(j), gc=True)
        assert isinstance(on, Final)
        assert same(off.result, on.result), (off.result, on.result)
    for name in SMALL:

        def observe(state: MachineState) -> None:
            if state.token.flag is Flag.NONE:
                _collect_is_idempotent(state)

        run(corpus_graph(name), observer=observe)
    for j in judgements[:SEEDED]:
        out = run(translate(j))
        _collect_is_idempotent(out.state)


def _row_is_constant(g, every: int) -> None:
    params = decompose_composite(g).params
    row_len = len(g.row)
    count = 0

    def observe(state: MachineState) -> None:
        nonlocal count
        gr = state.graph
        assert len(gr.row) == row_len, state.steps
        assert gr.param_values() == params, state.steps
        count += 1
        if count % every == 0:
            assert decompose_composite(gr).params == params, state.steps

    out = run(g, observer=observe)
    assert isinstance(out, Final)
    assert decompose_composite(out.graph).params == params


def test_criterion_5_parameter_linearity(judgements):
    for name in SMALL:
        _row_is_constant(corpus_graph(name), every=1)
    for name in LEARNING:
        _row_is_constant(corpus_graph(name), every=10_000)
    for j in judgements[:SEEDED]:
        _row_is_constant(translate(j), every=1)


def test_criterion_6_validity_preservation():
    for name in SMALL:
        rep = validate_graph(corpus_graph(name), per_step=True)
        assert rep.ok, (name, rep.errors)


def test_criterion_7_oracle_equivalence(judgements, outcomes):
    for j, out in zip(judgements, outcomes):
        ref = eval_direct(j.subject)
        assert isinstance(out, Final)
        assert close(out.result, ref.readout, 1e-9), (out.result, ref.readout)
        assert out.graph.count(Kind.PBANG) == ref.cells


def test_criterion_8_iterated_operations():
    rng = random.Random(8)
    for n in range(1, 6):
        for op in ("vsum", "vscale"):
            for _ in range(5):
                a, b, c = (rng.randint(-3, 3) for _ in range(3))
                p = [rng.randint(-4, 4) for _ in range(n)]
                got = final(iterated_program(op, a, b, c, p)).result
                ref = foldr_reference(op, a, b, c, [float(x) for x in p])
                assert abs(got - ref) <= 1e-12, (op, a, b, c, p, got, ref)


def test_criterion_9_learning_demo():
    bounds = {"ex6a": 2.0, "ex6b": 1.0}
    for name in LEARNING:
        g = corpus_graph(name)
        t0 = time.perf_counter()
        out = run(g)
        elapsed = time.perf_counter() - t0
        assert isinstance(out, Final), name
        assert abs(out.result - bounds[name]) < 0.1, (name, out.result)
        assert elapsed < 10.0, (name, elapsed)
