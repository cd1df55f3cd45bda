"""Machine traces: per-step snapshots, JSON export and DOT rendering."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

from .gc import garbage_nodes
from .graph import Kind
from .machine import BOTTOM, MachineState

TRACE_VERSION = 1

_PROVISIONAL = {Kind.PBANG, Kind.PWHY, Kind.PCONTRACT, Kind.PDER}


@dataclass
class TokenView:
    direction: str
    flag: str
    cstack: list[Any]
    bstack: list[int]


@dataclass
class NodeView:
    id: int
    label: str
    box: Optional[int]
    garbage: bool
    kind: str = ""


@dataclass
class LinkView:
    id: int
    type: str
    src: Optional[list[int]]
    dst: Optional[list[int]]


@dataclass
class BoxView:
    id: int
    parent: Optional[int]


@dataclass
class TraceFrame:
    step: int
    kind: str
    rule: str
    token: TokenView
    nodes: list[NodeView]
    links: list[LinkView]
    position: int
    boxes: list[BoxView] = field(default_factory=list)


def _data(x: Any) -> Any:
    if isinstance(x, tuple):
        return [_data(v) for v in x]
    return x


def frame_of(state: MachineState) -> TraceFrame:
    g = state.graph
    t = state.token
    dead = garbage_nodes(g)
    nodes = [
        NodeView(n.id, n.label(), n.box, n.id in dead, n.kind.name)
        for n in sorted(g.nodes.values(), key=lambda n: n.id)
    ]
    links = [
        LinkView(l.id, str(l.type), list(l.src) if l.src else None, list(l.dst) if l.dst else None)
        for l in sorted(g.links.values(), key=lambda l: l.id)
    ]
    boxes = [BoxView(b.id, b.parent) for b in sorted(g.boxes.values(), key=lambda b: b.id)]
    stack = [_data(x) for x in t.cstack if x != BOTTOM]
    token = TokenView(t.direction, t.flag_text(), stack, list(t.bstack))
    return TraceFrame(state.steps, state.kind or "pass", state.rule, token, nodes, links, t.position, boxes)


class Recorder:
    """Observer for ``machine.run`` that keeps one frame per transition."""

    def __init__(self) -> None:
        self.frames: list[TraceFrame] = []

    def __call__(self, state: MachineState) -> None:
        self.frames.append(frame_of(state))


# ---------------------------------------------------------------------------
# JSON

def export_json(frames: list[TraceFrame]) -> str:
    doc = {"version": TRACE_VERSION, "frames": [asdict(f) for f in frames]}
    return json.dumps(doc, ensure_ascii=False, separators=(",", ":"))


def parse_json(text: str) -> list[TraceFrame]:
    doc = json.loads(text)
    if doc.get("version") != TRACE_VERSION:
        raise ValueError(f"unsupported trace version {doc.get('version')!r}")
    out = []
    for f in doc["frames"]:
        out.append(
            TraceFrame(
                f["step"],
                f["kind"],
                f["rule"],
                TokenView(**f["token"]),
                [NodeView(**n) for n in f["nodes"]],
                [LinkView(**l) for l in f["links"]],
                f["position"],
                [BoxView(**b) for b in f.get("boxes", [])],
            )
        )
    return out


# ---------------------------------------------------------------------------
# DOT

def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _node_attrs(n: NodeView) -> str:
    attrs = [f"label={_quote(n.label)}"]
    if n.garbage:
        attrs += ["color=grey", "fontcolor=grey", "style=dashed"]
    elif n.kind and Kind[n.kind] in _PROVISIONAL:
        attrs += ["color=red", "fontcolor=red"]
    elif n.kind == Kind.ABD.name:
        attrs += ["color=blue", "fontcolor=blue", "style=bold"]
    return ", ".join(attrs)


def export_dot(frame: TraceFrame) -> str:
    """Render one frame as a DOT digraph; boxes become nested clusters."""
    lines = ["digraph machine {", "  rankdir=BT;", "  node [shape=box, fontname=monospace];"]
    children: dict[Optional[int], list[int]] = {}
    for b in frame.boxes:
        children.setdefault(b.parent, []).append(b.id)
    members: dict[Optional[int], list[NodeView]] = {}
    for n in frame.nodes:
        members.setdefault(n.box, []).append(n)

    def emit(box: Optional[int], indent: str) -> None:
        for n in members.get(box, []):
            lines.append(f"{indent}n{n.id} [{_node_attrs(n)}];")
        for c in children.get(box, []):
            lines.append(f"{indent}subgraph cluster_{c} {{")
            lines.append(f'{indent}  label="box {c}"; style=rounded;')
            emit(c, indent + "  ")
            lines.append(f"{indent}}}")

    emit(None, "  ")
    for l in frame.links:
        src = f"n{l.src[0]}" if l.src else f"free_s{l.id}"
        dst = f"n{l.dst[0]}" if l.dst else f"free_d{l.id}"
        for end, present in ((src, l.src), (dst, l.dst)):
            if not present:
                lines.append(f"  {end} [shape=point];")
        attrs = [f"label={_quote(f'{l.id}: {l.type}')}"]
        if l.id == frame.position:
            attrs += ["color=orange", "penwidth=3", "fontcolor=orange"]
        lines.append(f"  {src} -> {dst} [{', '.join(attrs)}];")
    tok = frame.token
    lines.append(
        f"  label={_quote(f'step {frame.step} {frame.rule} | {tok.direction} {tok.flag} {tok.cstack}')};"
    )
    lines.append("}")
    return "\n".join(lines) + "\n"

