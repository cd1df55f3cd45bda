"""Command-line front end: ``run``, ``check``, ``validate`` and ``examples``."""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from .criteria import check_criteria, valid_state
from .graph import Graph, check_wellformed, decompose_composite
from .machine import Final, MachineState, StepLimit, Stuck, format_value, run
from .oracle import eval_direct
from .syntax import SyntaxErrorAt, parse, pretty
from .trace import Recorder, export_dot, export_json
from .translate import translate
from .typecheck import Judgement, TypeErrorAt, typecheck

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_RUN = 2
EXIT_CHECK = 3


class InputError(Exception):
    pass


def corpus_names() -> list[str]:
    root = resources.files("abdgoi") / "corpus"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".abd"))


def read_program(path: str) -> str:
    """Read a file, falling back to the bundled corpus (``ex1`` or ``ex1.abd``)."""
    p = Path(path)
    if p.exists():
        return p.read_text(encoding="utf-8")
    stem = p.name[:-4] if p.name.endswith(".abd") else p.name
    bundled = resources.files("abdgoi") / "corpus" / f"{stem}.abd"
    if bundled.is_file():
        return bundled.read_text(encoding="utf-8")
    raise InputError(f"no such file: {path}")


def load(path: str) -> Judgement:
    src = read_program(path)
    try:
        return typecheck(parse(src))
    except SyntaxErrorAt as e:
        raise InputError(f"syntax error: {e}") from e
    except TypeErrorAt as e:
        where = f" in {pretty(e.term)}" if e.term is not None else ""
        raise InputError(f"type error: {e}{where}") from e


# ---------------------------------------------------------------------------
# Validation

@dataclass
class Report:
    errors: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    result: Optional[object] = None

    @property
    def ok(self) -> bool:
        return not self.errors


def graph_errors(g: Graph) -> list[str]:
    errs = [f"well-formedness: {e}" for e in check_wellformed(g)]
    return errs + check_criteria(g)[0]


def validate_graph(
    g: Graph,
    per_step: bool = False,
    expected: Optional[float] = None,
    gc: bool = False,
    max_steps: int = 10**6,
) -> Report:
    """Check a composite graph before and, optionally, during execution."""
    rep = Report()
    errs = graph_errors(g)
    if errs:
        rep.errors.append(f"step 0: {errs[0]}")
        return rep
    params = tuple(decompose_composite(g).params)

    def observe(state: MachineState) -> None:
        if rep.errors:
            return
        errs = graph_errors(state.graph) + valid_state(state, graph_checks=False)
        now = tuple(decompose_composite(state.graph).params)
        if now != params:
            errs.append(f"parameter row changed from {list(params)} to {list(now)}")
        if errs:
            rep.errors.append(f"step {state.steps} ({state.rule}): {errs[0]}")

    out = run(g, max_steps=max_steps, gc=gc, observer=observe if per_step else None)
    if isinstance(out, Stuck):
        rep.errors.append(f"stuck: {out.diagnostic}")
        return rep
    if isinstance(out, StepLimit):
        rep.errors.append(f"step limit reached after {out.state.steps} steps")
        return rep
    rep.result = out.result
    rep.notes.append(f"final after {out.steps} steps: {format_value(out.result)}")
    if per_step and not rep.errors:
        rep.notes.append("every state is valid")
    if expected is not None and isinstance(expected, float):
        got = out.result
        same = isinstance(got, float) and (
            (math.isnan(got) and math.isnan(expected)) or abs(got - expected) <= 1e-9 * max(1.0, abs(expected))
        )
        if same:
            rep.notes.append(f"oracle agrees: {format_value(expected)}")
        else:
            rep.errors.append(f"oracle mismatch: machine {format_value(got)}, oracle {format_value(expected)}")
    return rep


# ---------------------------------------------------------------------------
# Commands

def cmd_run(args: argparse.Namespace) -> int:
    j = load(args.file)
    g = translate(j)
    rec = Recorder() if (args.trace or args.dot) else None
    out = run(g, max_steps=args.max_steps, gc=args.gc, seed=args.seed, observer=rec)
    if rec is not None:
        if args.trace:
            Path(args.trace).write_text(export_json(rec.frames), encoding="utf-8")
        if args.dot:
            d = Path(args.dot)
            d.mkdir(parents=True, exist_ok=True)
            for i, fr in enumerate(rec.frames):
                (d / f"frame_{i:06d}.dot").write_text(export_dot(fr), encoding="utf-8")
    if isinstance(out, Final):
        print(f"result: {format_value(out.result)}")
        return EXIT_OK
    if isinstance(out, StepLimit):
        print(f"error: step limit of {args.max_steps} reached", file=sys.stderr)
    else:
        print(f"error: stuck: {out.diagnostic}", file=sys.stderr)
    return EXIT_RUN


def cmd_check(args: argparse.Namespace) -> int:
    j = load(args.file)
    print(j.summary())
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    j = load(args.file)
    expected = None
    if args.oracle:
        r = eval_direct(j.subject).readout
        if isinstance(r, float):
            expected = r
        else:
            print(f"note: oracle readout {r} is not a scalar; comparison skipped")
    rep = validate_graph(translate(j), per_step=args.per_step, expected=expected, gc=args.gc, max_steps=args.max_steps)
    for n in rep.notes:
        print(n)
    for e in rep.errors:
        print(f"violation: {e}")
    return EXIT_OK if rep.ok else EXIT_CHECK


def cmd_examples(args: argparse.Namespace) -> int:
    for name in corpus_names():
        first = read_program(name).splitlines()[0]
        print(f"{name:6} {first.lstrip('# ')}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="abdgoi", description="Abductive lambda calculus on a token-passing graph machine.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="evaluate a program")
    r.add_argument("file")
    r.add_argument("--gc", action="store_true", help="interleave garbage collection")
    r.add_argument("--max-steps", type=int, default=10**6)
    r.add_argument("--trace", metavar="PATH", help="write a JSON trace")
    r.add_argument("--dot", metavar="DIR", help="write one DOT file per frame")
    r.add_argument("--seed", type=int, default=None, help="shuffle the deep-rule order")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", help="type-check a program")
    c.add_argument("file")
    c.set_defaults(func=cmd_check)

    v = sub.add_parser("validate", help="run with validity checks")
    v.add_argument("file")
    v.add_argument("--oracle", action="store_true", help="compare with the direct evaluator")
    v.add_argument("--per-step", action="store_true", help="check every intermediate state")
    v.add_argument("--gc", action="store_true")
    v.add_argument("--max-steps", type=int, default=10**6)
    v.set_defaults(func=cmd_validate)

    e = sub.add_parser("examples", help="list bundled programs")
    e.set_defaults(func=cmd_examples)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
