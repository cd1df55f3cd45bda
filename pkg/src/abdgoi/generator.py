"""Random well-typed closed programs of field type, for fuzzing the machine."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .syntax import FIELD, Abd, Abs, App, Arrow, Const, NameSupply, PrimOp, Prov, Term, Type, Var, Vec

FF = Arrow(FIELD, FIELD)


@dataclass
class Limits:
    depth: int = 6
    provs: int = 4
    decouplings: int = 2


@dataclass
class _Ctx:
    rng: random.Random
    limits: Limits
    names: NameSupply = field(default_factory=NameSupply)
    provs: int = 0
    counter: int = 0

    def var(self, stem: str) -> str:
        self.counter += 1
        return f"{stem}{self.counter}"


Env = tuple[tuple[str, Type], ...]


def _of(env: Env, ty: Type) -> list[str]:
    return [x for x, t in env if t == ty]


def _vectors(env: Env) -> list[Vec]:
    out: list[Vec] = []
    for _, t in env:
        if isinstance(t, Vec) and t not in out:
            out.append(t)
    return out


def _const(c: _Ctx) -> Term:
    return Const(float(c.rng.randint(-3, 4)))


def _field(c: _Ctx, env: Env, depth: int, nest: int) -> Term:
    """A term of type F whose syntax tree has at most ``depth`` levels."""
    rng = c.rng
    leaves = ["const"]
    if c.provs < c.limits.provs:
        leaves.append("prov")
    if _of(env, FIELD):
        leaves.append("var")
    options = list(leaves)
    if depth >= 2:
        options += ["op", "op", "app"]
        if _vectors(env):
            options += ["dot", "model"]
    if depth >= 3:
        options.append("let")
        if nest < c.limits.decouplings:
            options.append("abd")
    choice = rng.choice(options)
    d = depth - 1
    if choice == "const":
        return _const(c)
    if choice == "prov":
        c.provs += 1
        return Prov(float(rng.randint(-2, 3)))
    if choice == "var":
        return Var(rng.choice(_of(env, FIELD)))
    if choice == "op":
        op = rng.choice(["+", "-", "*", "*", "/"])
        right = Const(float(rng.choice([-2, -1, 2, 4]))) if op == "/" else _field(c, env, d, nest)
        return PrimOp(op, _field(c, env, d, nest), right)
    if choice == "app":
        return App(_fun(c, env, d, nest), _field(c, env, d, nest))
    if choice == "let":
        x = c.var("x")
        ty = rng.choice([FIELD, FIELD, FF])
        bound = _field(c, env, d, nest) if ty == FIELD else _fun(c, env, d, nest)
        return App(Abs(x, None, _field(c, env + ((x, ty),), d - 1, nest)), bound)
    if choice == "dot":
        v = rng.choice(_vectors(env))
        return PrimOp(".", _vector(c, env, v, d, nest), _vector(c, env, v, d, nest))
    if choice == "model":
        return _model_use(c, env, d, nest, FIELD)
    return _decouple(c, env, d, nest)


def _fun(c: _Ctx, env: Env, depth: int, nest: int) -> Term:
    rng = c.rng
    options = []
    if depth >= 2:
        options.append("abs")
    if _of(env, FF):
        options += ["var", "var"]
    if depth >= 2 and _models(env, FF):
        options.append("model")
    if not options:
        raise _TooShallow
    choice = rng.choice(options)
    if choice == "var":
        return Var(rng.choice(_of(env, FF)))
    if choice == "model":
        return _model_use(c, env, depth - 1, nest, FF)
    x = c.var("x")
    return Abs(x, FIELD, _field(c, env + ((x, FIELD),), depth - 1, nest))


class _TooShallow(Exception):
    pass


def _models(env: Env, cod: Type) -> list[tuple[str, Arrow]]:
    return [(x, t) for x, t in env if isinstance(t, Arrow) and isinstance(t.dom, Vec) and t.cod == cod]


def _model_use(c: _Ctx, env: Env, depth: int, nest: int, cod: Type) -> Term:
    """``f v`` for a model ``f`` in scope; ``depth`` bounds the argument."""
    models = _models(env, cod)
    if not models:
        return _field(c, env, depth + 1, nest) if cod == FIELD else _fun(c, env, depth + 1, nest)
    f, t = c.rng.choice(models)
    assert isinstance(t.dom, Vec)
    return App(Var(f), _vector(c, env, t.dom, depth, nest))


def _vector(c: _Ctx, env: Env, v: Vec, depth: int, nest: int) -> Term:
    rng = c.rng
    base = Var(rng.choice(_of(env, v)))
    options = ["var", "var"]
    if depth >= 2:
        options += ["add", "scale"]
    if depth >= 3:
        options += ["vsum", "vscale"]
    choice = rng.choice(options)
    d = depth - 1
    if choice == "var":
        return base
    if choice == "add":
        return PrimOp("+", _vector(c, env, v, d, nest), _vector(c, env, v, d, nest))
    if choice == "scale":
        return PrimOp("*", _field(c, env, d, nest), _vector(c, env, v, d, nest))
    e = c.var("e")
    inner = env + ((e, v),)
    if choice == "vsum":
        return PrimOp("vsum", Abs(e, None, _vector(c, inner, v, d - 1, nest)), _vector(c, env, v, d, nest))
    return PrimOp("vscale", Abs(e, None, _field(c, inner, d - 1, nest)), _vector(c, env, v, d, nest))


def _decouple(c: _Ctx, env: Env, depth: int, nest: int) -> Term:
    """``(abd (f, p) -> body) bound``; ``depth`` is the budget below the application."""
    rng = c.rng
    a = c.names.fresh("a")
    v = Vec(a)
    f, p = c.var("f"), c.var("p")
    cod = rng.choice([FIELD, FIELD, FF])
    bound = _field(c, env, depth, nest + 1) if cod == FIELD else _fun(c, env, depth, nest + 1)
    body = _field(c, env + ((f, Arrow(v, cod)), (p, v)), depth - 1, nest + 1)
    return App(Abd(a, f, p, None, body), bound)


def generate(rng: random.Random, limits: Optional[Limits] = None) -> Term:
    """A closed term of type F within the given limits (not yet type-checked).

    Bare constants and terms with fewer than three levels are rejected.
    """
    lim = limits or Limits()
    while True:
        c = _Ctx(rng, lim)
        try:
            t = _field(c, (), lim.depth, 0)
        except _TooShallow:
            continue
        if depth(t) >= min(3, lim.depth):
            return t


def generate_corpus(n: int, seed: int = 0, limits: Optional[Limits] = None) -> list[Term]:
    rng = random.Random(seed)
    return [generate(rng, limits) for _ in range(n)]


def depth(t: Term) -> int:
    """Levels of the syntax tree; a leaf has depth 1."""
    if isinstance(t, (Abs, Abd)):
        return 1 + depth(t.body)
    if isinstance(t, App):
        return 1 + max(depth(t.fun), depth(t.arg))
    if isinstance(t, PrimOp):
        return 1 + max(depth(t.left), depth(t.right))
    return 1


def decoupling_nesting(t: Term) -> int:
    if isinstance(t, Abd):
        return 1 + decoupling_nesting(t.body)
    if isinstance(t, Abs):
        return decoupling_nesting(t.body)
    if isinstance(t, App):
        inner = decoupling_nesting(t.arg)
        if isinstance(t.fun, Abd):
            inner += 1
        return max(decoupling_nesting(t.fun), inner)
    if isinstance(t, PrimOp):
        return max(decoupling_nesting(t.left), decoupling_nesting(t.right))
    return 0


