"""Direct-style reference evaluator, used as a test oracle.

Call-by-value over environments, evaluating arguments before functions.
Every provisional leaf owns one Cell; arithmetic touching a Cell builds a
symbolic DAG instead of collapsing, so decoupled models can later replay the
computation with the Cells replaced by vector components.

The parameters collected by a decoupling are the Cells in the *footprint* of
the decoupled argument: the provisional leaves of the argument term plus the
footprints of the values of its free variables.  Cells already replaced by an
enclosing model no longer count.  Parameters are ordered by leaf index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .syntax import Abd, Abs, App, Const, Op, PrimOp, Prov, Term, Var, subterms


@dataclass(frozen=True)
class Cell:
    id: int
    current: float


@dataclass(frozen=True)
class SymNode:
    op: Op
    operands: tuple["Scalar", "Scalar"]


Scalar = Union[float, Cell, SymNode]


@dataclass(frozen=True)
class VecVal:
    items: tuple[Scalar, ...]


Subst = dict[int, Scalar]


@dataclass(frozen=True)
class Binding:
    value: "Value"
    footprint: frozenset[int]


@dataclass(frozen=True)
class Closure:
    param: str
    body: Term
    env: dict[str, Binding]
    substs: tuple[Subst, ...] = ()


@dataclass(frozen=True)
class AbdClosure:
    term: Abd
    env: dict[str, Binding]
    substs: tuple[Subst, ...] = ()


@dataclass(frozen=True)
class Model:
    """A decoupled model: replays ``value`` with ``cells`` bound to a vector."""

    value: "Value"
    cells: tuple[int, ...]
    substs: tuple[Subst, ...] = ()


Value = Union[float, Cell, SymNode, VecVal, Closure, AbdClosure, Model]


class OracleError(Exception):
    pass


def fdiv(a: float, b: float) -> float:
    if b == 0.0:
        if a == 0.0 or math.isnan(a):
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)
    return a / b


_SCALAR: dict[Op, Callable[[float, float], float]] = {
    Op.ADD: lambda a, b: a + b,
    Op.SUB: lambda a, b: a - b,
    Op.MUL: lambda a, b: a * b,
    Op.DIV: fdiv,
}


def scalar_op(op: Op, a: Scalar, b: Scalar) -> Scalar:
    if isinstance(a, float) and isinstance(b, float):
        return _SCALAR[op](a, b)
    return SymNode(op, (a, b))


def dot(a: tuple[Scalar, ...], b: tuple[Scalar, ...]) -> Scalar:
    if len(a) != len(b):
        raise OracleError(f"dimension mismatch {len(a)} vs {len(b)}")
    acc: Scalar = 0.0
    for x, y in zip(a, b):
        acc = scalar_op(Op.ADD, acc, scalar_op(Op.MUL, x, y))
    return acc


def basis(n: int, i: int) -> VecVal:
    return VecVal(tuple(1.0 if j == i else 0.0 for j in range(n)))


# ---------------------------------------------------------------------------
# Substitution

def subst(v: Value, s: Subst) -> Value:
    memo: dict[int, Scalar] = {}

    def sc(x: Scalar) -> Scalar:
        if isinstance(x, float):
            return x
        if isinstance(x, Cell):
            return s.get(x.id, x)
        key = id(x)
        if key not in memo:
            memo[key] = scalar_op(x.op, sc(x.operands[0]), sc(x.operands[1]))
        return memo[key]

    def go(u: Value) -> Value:
        if isinstance(u, (float, Cell, SymNode)):
            return sc(u)
        if isinstance(u, VecVal):
            return VecVal(tuple(sc(x) for x in u.items))
        if isinstance(u, Closure):
            return Closure(u.param, u.body, _subst_env(u.env, s), u.substs + (s,))
        if isinstance(u, AbdClosure):
            return AbdClosure(u.term, _subst_env(u.env, s), u.substs + (s,))
        if isinstance(u, Model):
            return Model(u.value, u.cells, u.substs + (s,))
        raise OracleError(f"cannot substitute into {u!r}")

    return go(v)


def _subst_env(env: dict[str, Binding], s: Subst) -> dict[str, Binding]:
    gone = frozenset(s)
    return {k: Binding(subst(b.value, s), b.footprint - gone) for k, b in env.items()}


# ---------------------------------------------------------------------------
# Evaluator

class _Evaluator:
    def __init__(self, term: Term) -> None:
        self.leaf: dict[int, int] = {}
        self.values: list[float] = []
        for t in subterms(term):
            if isinstance(t, Prov):
                self.leaf[id(t)] = len(self.values)
                self.values.append(float(t.value))
        self._provs: dict[int, frozenset[int]] = {}
        self._free: dict[int, frozenset[str]] = {}

    # static information -----------------------------------------------------
    def provs(self, t: Term) -> frozenset[int]:
        key = id(t)
        if key not in self._provs:
            self._provs[key] = frozenset(self.leaf[id(s)] for s in subterms(t) if isinstance(s, Prov))
        return self._provs[key]

    def free(self, t: Term) -> frozenset[str]:
        key = id(t)
        if key in self._free:
            return self._free[key]
        if isinstance(t, Var):
            r = frozenset([t.name])
        elif isinstance(t, Abs):
            r = self.free(t.body) - {t.var}
        elif isinstance(t, Abd):
            r = self.free(t.body) - {t.f, t.x}
        elif isinstance(t, App):
            r = self.free(t.fun) | self.free(t.arg)
        elif isinstance(t, PrimOp):
            r = self.free(t.left) | self.free(t.right)
        else:
            r = frozenset()
        self._free[key] = r
        return r

    def footprint(self, t: Term, env: dict[str, Binding], substs: tuple[Subst, ...]) -> frozenset[int]:
        out = {c for c in self.provs(t) if not any(c in s for s in substs)}
        for x in self.free(t):
            out |= env[x].footprint
        return frozenset(out)

    # evaluation ---------------------------------------------------------------
    def eval(self, t: Term, env: dict[str, Binding], substs: tuple[Subst, ...]) -> Value:
        if isinstance(t, Var):
            if t.name not in env:
                raise OracleError(f"unbound variable {t.name!r}")
            return env[t.name].value
        if isinstance(t, Const):
            return float(t.value)
        if isinstance(t, Prov):
            c = self.leaf[id(t)]
            v: Value = Cell(c, self.values[c])
            for s in substs:
                v = subst(v, s)
            return v
        if isinstance(t, Abs):
            return Closure(t.var, t.body, env, substs)
        if isinstance(t, Abd):
            return AbdClosure(t, env, substs)
        if isinstance(t, App):
            arg = self.eval(t.arg, env, substs)
            fp = self.footprint(t.arg, env, substs)
            fun = self.eval(t.fun, env, substs)
            return self.apply(fun, arg, fp)
        if isinstance(t, PrimOp):
            right = self.eval(t.right, env, substs)
            left = self.eval(t.left, env, substs)
            assert t.kind is not None, "oracle needs a type-checked term"
            return self.prim(t.kind.op, left, right)
        raise OracleError(f"unknown term {t!r}")

    def apply(self, fun: Value, arg: Value, fp: frozenset[int]) -> Value:
        if isinstance(fun, Closure):
            return self.eval(fun.body, {**fun.env, fun.param: Binding(arg, fp)}, fun.substs)
        if isinstance(fun, AbdClosure):
            cells = tuple(sorted(fp))
            params = VecVal(tuple(self.values[c] for c in cells))
            model = Model(arg, cells)
            t = fun.term
            env = {**fun.env, t.f: Binding(model, frozenset()), t.x: Binding(params, frozenset())}
            return self.eval(t.body, env, fun.substs)
        if isinstance(fun, Model):
            if not isinstance(arg, VecVal) or len(arg.items) != len(fun.cells):
                raise OracleError("model applied to a vector of the wrong dimension")
            out = subst(fun.value, dict(zip(fun.cells, arg.items)))
            for s in fun.substs:
                out = subst(out, s)
            return out
        raise OracleError(f"{fun!r} is not a function")

    def prim(self, op: Op, left: Value, right: Value) -> Value:
        if op in _SCALAR:
            return scalar_op(op, left, right)  # type: ignore[arg-type]
        if op is Op.VADD:
            if len(left.items) != len(right.items):  # type: ignore[union-attr]
                raise OracleError("dimension mismatch in vector addition")
            return VecVal(tuple(scalar_op(Op.ADD, a, b) for a, b in zip(left.items, right.items)))  # type: ignore[union-attr]
        if op is Op.SMUL:
            return VecVal(tuple(scalar_op(Op.MUL, left, b) for b in right.items))  # type: ignore[union-attr, arg-type]
        if op is Op.DOT:
            return dot(left.items, right.items)  # type: ignore[union-attr]
        if op in (Op.VSUM, Op.VSCALE):
            n = len(right.items)  # type: ignore[union-attr]
            acc = right
            for i in reversed(range(n)):
                fe = self.apply(left, basis(n, i), frozenset())
                acc = self.prim(Op.VADD if op is Op.VSUM else Op.SMUL, fe, acc)
            return acc
        raise OracleError(f"unknown operation {op}")


# ---------------------------------------------------------------------------
# Readout

def readout(v: Value) -> Union[float, list[float], str]:
    """Numeric value at the current Cell values; functions read as ``λ``."""
    memo: dict[int, float] = {}

    def sc(x: Scalar) -> float:
        if isinstance(x, float):
            return x
        if isinstance(x, Cell):
            return x.current
        key = id(x)
        if key not in memo:
            memo[key] = _SCALAR[x.op](sc(x.operands[0]), sc(x.operands[1]))
        return memo[key]

    if isinstance(v, (float, Cell, SymNode)):
        return sc(v)
    if isinstance(v, VecVal):
        return [sc(x) for x in v.items]
    return "λ"


@dataclass
class OracleResult:
    value: Value
    readout: Union[float, list[float], str]
    cells: int = field(default=0)


def eval_direct(term: Term) -> OracleResult:
    """Evaluate a closed, type-checked term."""
    ev = _Evaluator(term)
    v = ev.eval(term, {}, ())
    return OracleResult(v, readout(v), len(ev.values))
