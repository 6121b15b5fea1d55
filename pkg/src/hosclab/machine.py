"""Heaps and small-step reduction: the plain semantics on (M, h) and the
extended semantics on (M, c, h) where captured continuations remember the
name of the continuation they were captured under."""

from __future__ import annotations

from dataclasses import dataclass, field

from .names import Name
from .printer import show_loc
from .syntax import (
    FF, HOLE, TT, UNIT_V, App, Assign, BinOp, BoolLit, Callcc, ContV, Deref,
    Fix, FName, If, IntLit, Lam, Loc, NewRef, Pair, Proj, Term, Throw, Var,
    is_value, plug, subst,
)
from .types import Type

DEFAULT_FUEL = 10_000


@dataclass(frozen=True, eq=False)
class Heap:
    """Finite map from locations to closed values.

    `region` decides where fresh locations are drawn from: term-side heaps
    use the default region, context-side heaps use "o", so that the two
    sides of an interaction never clash. Equality ignores the region.
    `types` optionally records the declared type of each cell.
    """

    cells: dict[Loc, Term] = field(default_factory=dict)
    region: str = ""
    types: dict[Loc, Type] = field(default_factory=dict)

    def __eq__(self, other) -> bool:
        return isinstance(other, Heap) and self.cells == other.cells

    def __hash__(self):
        return hash(frozenset(self.cells.items()))

    def __len__(self) -> int:
        return len(self.cells)

    def __contains__(self, loc: Loc) -> bool:
        return loc in self.cells

    def read(self, loc: Loc) -> Term:
        return self.cells[loc]

    def write(self, loc: Loc, v: Term) -> "Heap":
        return Heap({**self.cells, loc: v}, self.region, self.types)

    def fresh(self) -> Loc:
        used = [l.idx for l in self.cells if l.region == self.region]
        return Loc(max(used) + 1 if used else 0, self.region)

    def alloc(self, v: Term, ty: Type | None = None) -> tuple[Loc, "Heap"]:
        loc = self.fresh()
        types = self.types if ty is None else {**self.types, loc: ty}
        return loc, Heap({**self.cells, loc: v}, self.region, types)

    def merge(self, other: "Heap", region: str | None = None) -> "Heap":
        clash = self.cells.keys() & other.cells.keys()
        if clash:
            raise ValueError(f"heaps overlap on {sorted(clash)}")
        return Heap({**self.cells, **other.cells}, self.region if region is None else region,
                    {**self.types, **other.types})

    def with_region(self, region: str) -> "Heap":
        return Heap(self.cells, region, self.types)

    def map_values(self, fn) -> "Heap":
        return Heap({l: fn(v) for l, v in self.cells.items()}, self.region, self.types)

    def __str__(self) -> str:
        items = sorted(self.cells.items(), key=lambda kv: (kv[0].region, kv[0].idx))
        return "[" + ", ".join(f"{show_loc(l)} -> {v}" for l, v in items) + "]"


EMPTY_HEAP = Heap()


class MachineError(RuntimeError):
    """A well-typed closed term never raises this; it signals a stuck
    configuration that is neither a value nor a callback."""


@dataclass(frozen=True, slots=True)
class MachineState:
    term: Term
    cont: Name | None
    heap: Heap


def focus(m: Term) -> tuple[Term, Term] | None:
    """Split a non-value m into K[r] where r's evaluation positions hold
    values. Returns None for values."""
    match m:
        case Pair(a, b):
            if not is_value(a):
                k, r = focus(a)
                return Pair(k, b), r
            if not is_value(b):
                k, r = focus(b)
                return Pair(a, k), r
            return None
        case App(a, b) | Assign(a, b) | BinOp(_, a, b) | Throw(a, b):
            if not is_value(a):
                k, r = focus(a)
                return _rebuild2(m, k, None), r
            if not is_value(b):
                k, r = focus(b)
                return _rebuild2(m, None, k), r
            return HOLE, m
        case Proj(i, a):
            if not is_value(a):
                k, r = focus(a)
                return Proj(i, k), r
            return HOLE, m
        case NewRef(a):
            if not is_value(a):
                k, r = focus(a)
                return NewRef(k), r
            return HOLE, m
        case Deref(a):
            if not is_value(a):
                k, r = focus(a)
                return Deref(k), r
            return HOLE, m
        case If(a, b, c):
            if not is_value(a):
                k, r = focus(a)
                return If(k, b, c), r
            return HOLE, m
        case Callcc():
            return HOLE, m
    return None


def _rebuild2(m: Term, left: Term | None, right: Term | None) -> Term:
    match m:
        case App(a, b):
            return App(left or a, right or b)
        case Assign(a, b):
            return Assign(left or a, right or b)
        case BinOp(op, a, b):
            return BinOp(op, left or a, right or b)
        case Throw(a, b):
            return Throw(left or a, right or b)
    raise AssertionError(m)


def _arith(op: str, a: Term, b: Term) -> Term:
    match op, a, b:
        case "+", IntLit(x), IntLit(y):
            return IntLit(x + y)
        case "-", IntLit(x), IntLit(y):
            return IntLit(x - y)
        case "*", IntLit(x), IntLit(y):
            return IntLit(x * y)
        case "<", IntLit(x), IntLit(y):
            return TT if x < y else FF
        case "=", IntLit(x), IntLit(y):
            return TT if x == y else FF
        case "=", Loc(), Loc():
            return TT if a == b else FF
    raise MachineError(f"bad operands for {op}: {a}, {b}")


def _contract(r: Term, h: Heap) -> tuple[Term, Heap] | None:
    """One rule of the store-and-function fragment on a redex. None when r is
    a callback (application of a name) or a control operator."""
    match r:
        case App(Lam(x, _, body), v):
            return subst(body, {x: v}), h
        case App(Fix(f, x, _, _, body) as u, v):
            return subst(body, {x: v, f: u}), h
        case App(FName(), _) | App(Var("err"), _):
            return None
        case Proj(i, Pair(a, b)):
            return (a if i == 1 else b), h
        case If(BoolLit(b), t, e):
            return (t if b else e), h
        case BinOp(op, a, b):
            return _arith(op, a, b), h
        case Deref(Loc() as l):
            return h.read(l), h
        case NewRef(v):
            l, h2 = h.alloc(v)
            return l, h2
        case Assign(Loc() as l, v):
            return UNIT_V, h.write(l, v)
        case Callcc() | Throw():
            return None
    raise MachineError(f"stuck on {r}")


def step_base(m: Term, h: Heap) -> tuple[Term, Heap] | None:
    """One step of the plain semantics; None for values and stuck callbacks."""
    split = focus(m)
    if split is None:
        return None
    k, r = split
    match r:
        case Callcc(x, t, body):
            return plug(k, subst(body, {x: ContV(t, k)})), h
        case Throw(v, ContV(_, k2, None)):
            return plug(k2, v), h
        case Throw(_, ContV()):
            raise MachineError("named continuation in the plain semantics")
    out = _contract(r, h)
    if out is None:
        return None
    return plug(k, out[0]), out[1]


def step_ext(s: MachineState) -> MachineState | None:
    """One step of the extended semantics (continuations carry names)."""
    split = focus(s.term)
    if split is None:
        return None
    k, r = split
    match r:
        case Callcc(x, t, body):
            return MachineState(plug(k, subst(body, {x: ContV(t, k, s.cont)})), s.cont, s.heap)
        case Throw(v, ContV(_, k2, c2)) if c2 is not None:
            return MachineState(plug(k2, v), c2, s.heap)
        case Throw(_, ContV()):
            raise MachineError("unnamed continuation in the extended semantics")
    out = _contract(r, s.heap)
    if out is None:
        return None
    return MachineState(plug(k, out[0]), s.cont, out[1])


# -- outcomes of running to a normal form

@dataclass(frozen=True)
class Value:
    term: Term
    cont: Name | None
    heap: Heap
    steps: int = 0


@dataclass(frozen=True)
class Callback:
    ctx: Term
    fname: Name
    arg: Term
    cont: Name | None
    heap: Heap
    steps: int = 0


@dataclass(frozen=True)
class ErrStuck:
    ctx: Term
    cont: Name | None
    heap: Heap
    steps: int = 0


@dataclass(frozen=True)
class FuelExhausted:
    steps: int
    looping: bool = False  # a state repeated exactly: certain divergence

    def __str__(self) -> str:
        return "diverges" if self.looping else f"no normal form within {self.steps} steps"


Outcome = Value | Callback | ErrStuck | FuelExhausted


def _classify(m: Term, c: Name | None, h: Heap, steps: int) -> Outcome:
    if is_value(m):
        return Value(m, c, h, steps)
    k, r = focus(m)
    if isinstance(r, App) and isinstance(r.fn, FName):
        if r.fn.name.is_err:
            return ErrStuck(k, c, h, steps)
        return Callback(k, r.fn.name, r.arg, c, h, steps)
    if isinstance(r, App) and isinstance(r.fn, Var) and r.fn.name == "err":
        return ErrStuck(k, c, h, steps)
    raise MachineError(f"stuck on {r}")


def _drive(state, step, fuel: int):
    """Iterate `step` up to fuel times with Brent cycle detection."""
    power = lam = 1
    tortoise = state
    n = 0
    try:
        while n < fuel:
            nxt = step(state)
            if nxt is None:
                return state, n, False
            state = nxt
            n += 1
            if state == tortoise:
                return state, n, True
            if power == lam:
                tortoise, power, lam = state, power * 2, 0
            lam += 1
    except RecursionError:
        # the term outgrew the interpreter's stack (non-tail recursion):
        # as inconclusive as running out of fuel
        pass
    return state, n, None


def classify(s: MachineState) -> Outcome:
    """Outcome of a state that step_ext cannot advance."""
    return _classify(s.term, s.cont, s.heap, 0)


def run(s: MachineState, fuel: int = DEFAULT_FUEL) -> Outcome:
    final, n, loop = _drive(s, step_ext, fuel)
    if loop is None or loop:
        return FuelExhausted(n, bool(loop))
    return _classify(final.term, final.cont, final.heap, n)


def run_base(m: Term, h: Heap, fuel: int = DEFAULT_FUEL) -> Outcome:
    def step(st):
        out = step_base(*st)
        return out

    final, n, loop = _drive((m, h), step, fuel)
    if loop is None or loop:
        return FuelExhausted(n, bool(loop))
    return _classify(final[0], None, final[1], n)


@dataclass(frozen=True)
class Observation:
    verdict: bool
    outcome: Outcome

    def __bool__(self) -> bool:
        return self.verdict


def observes(m: Term, h: Heap, kind: str = "ter", fuel: int = DEFAULT_FUEL) -> Observation:
    """(M,h)⇓ter: reaches a value; (M,h)⇓err: gets stuck calling err."""
    out = run_base(m, h, fuel)
    if kind == "ter":
        return Observation(isinstance(out, Value), out)
    if kind == "err":
        return Observation(isinstance(out, ErrStuck), out)
    raise ValueError(f"unknown observation kind {kind!r}")
