from __future__ import annotations

import random

from hypothesis import given, settings
from hypothesis import strategies as st

from abdgoi.generator import Limits, decoupling_nesting, depth, generate, generate_corpus
from abdgoi.syntax import alpha_equal, parse, prov_values
from abdgoi.typecheck import typecheck


@settings(max_examples=300, deadline=None)
@given(st.integers(min_value=0, max_value=2**32))
def test_limits_are_respected(seed):
    t = generate(random.Random(seed))
    assert 3 <= depth(t) <= 6
    assert len(prov_values(t)) <= 4
    assert decoupling_nesting(t) <= 2


def test_custom_limits():
    lim = Limits(depth=4, provs=1, decouplings=0)
    for t in generate_corpus(100, seed=3, limits=lim):
        assert depth(t) <= 4 and len(prov_values(t)) <= 1 and decoupling_nesting(t) == 0


def test_reproducible_by_seed():
    a = generate_corpus(20, seed=11)
    b = generate_corpus(20, seed=11)
    assert all(alpha_equal(x, y) for x, y in zip(a, b))


def test_corpus_exercises_decoupling_and_folds():
    ts = generate_corpus(500, seed=0)
    assert sum(decoupling_nesting(t) == 2 for t in ts) > 20
    assert sum(bool(prov_values(t)) for t in ts) > 300
    for t in ts:
        typecheck(t)


def test_measures():
    assert depth(parse("1")) == 1
    assert depth(parse("1 + 2")) == 2
    assert decoupling_nesting(parse("let g @ q = (let f @ p = {1} in f p) in g q")) == 2
