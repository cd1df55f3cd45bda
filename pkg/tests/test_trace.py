from __future__ import annotations

import json

from abdgoi.machine import init_state, run
from abdgoi.trace import Recorder, export_dot, export_json, frame_of, parse_json
from abdgoi.translate import compile_source

from conftest import compile_named


def record(src: str, **kw) -> list:
    _, g = compile_source(src)
    rec = Recorder()
    run(g, observer=rec, **kw)
    return rec.frames


def test_empty_trace():
    assert export_json([]) == '{"version":1,"frames":[]}'


def test_first_frame_shows_the_initial_query():
    frames = record("{1} + 2")
    f = frames[0]
    assert f.step == 0 and f.kind == "init"
    assert f.token.cstack == ["★"]
    assert f.token.direction == "up" and f.token.flag == "□"


def test_round_trip_and_determinism():
    frames = record("let f @ p = {1} + {2} in f (2 * p)")
    text = export_json(frames)
    assert parse_json(text) == frames
    assert export_json(parse_json(text)) == text
    doc = json.loads(text)
    assert list(doc) == ["version", "frames"]
    assert list(doc["frames"][0]) == ["step", "kind", "rule", "token", "nodes", "links", "position", "boxes"]


def test_vectors_render_as_lists():
    frames = record("let f @ p = {1} + {2} in p . p")
    stacks = [x for f in frames for x in f.token.cstack]
    assert [1.0, 2.0] in stacks


def test_frame_kinds():
    frames = record("(fun (x : F) -> 3) 4", gc=True)
    kinds = {f.kind for f in frames}
    assert kinds == {"init", "pass", "rewrite", "gc"}


def test_dot_has_one_cluster_per_box():
    frames = record("(fun (x : F) -> x) 4")
    dot = export_dot(frames[0])
    assert dot.startswith("digraph")
    assert dot.count("subgraph cluster_") == 1


def test_dot_highlights_the_token_link():
    f = record("1 + 2")[2]
    line = next(l for l in export_dot(f).splitlines() if f'"{f.position}: ' in l)
    assert "penwidth=3" in line


def test_dot_greys_garbage_and_marks_provisional_nodes():
    _, g = compile_source("(fun (x : F) -> 3) {4}")
    out = run(g)
    dot = export_dot(frame_of(out.state))
    assert "color=grey" in dot
    _, g = compile_named("ex1")
    dot = export_dot(frame_of(init_state(g)))
    assert "color=red" in dot and "color=blue" in dot
