"""Context synthesis: compile an even-length, O-started trace into a passive
context configuration whose even-length traces are exactly the prefixes of
that trace (up to renaming of the names introduced along the way).

Two constructions. The cell construction (HOSC, and HOS without control)
keeps one reference per name of the trace: cells for the context's own
names hold the code to run when that name is used next, cells for the
other side's names remember them once played. The clock construction
(GOSC, and GOS without control) keeps a single integer reference counting
O-actions; every name of the context dispatches on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .avals import DEFAULT_INTS, Assignment, recompose
from .equiv import Bounds, enumerate_traces
from .lts import Config
from .machine import DEFAULT_FUEL, Heap
from .names import ERRN, Name, final_name
from .printer import show_term
from .syntax import (
    HOLE, UNIT_V, App, Assign, BinOp, BoolLit, Callcc, ContV, Deref, Fix, FName, If, IntLit,
    Lam, Loc, NewRef, Pair, Proj, Term, Throw, Var, let, plug, replace_names, seq, transform, walk,
)
from .traces import Action, Trace, TraceError, canonicalize, check_well_formed, p_bracketed, p_visible
from .types import INT, UNIT, Arrow, ContT, Model, RefT, Type, is_subtype
from .typing import TypeCheckError, TypingEnv, fragment_of, infer_context_type, infer_type


class SynthesisError(ValueError):
    def __init__(self, msg: str, prefix: Trace | None = None):
        super().__init__(msg if prefix is None else f"{msg} (failing prefix: {prefix})")
        self.prefix = prefix


@dataclass(frozen=True)
class Cell:
    role: str  # fp, cp, fo, co (cell construction) or tick
    index: int
    name: Name | None
    loc: Loc
    type: Type  # content type

    @property
    def label(self) -> str:
        return self.role if self.role == "tick" else f"{self.role}{self.index}"


@dataclass(frozen=True)
class SynthesisPlan:
    construction: str  # "cells" or "clock"
    cells: tuple[Cell, ...]
    arms: Mapping[int, Term] = field(default_factory=dict)  # clock: step -> guarded code

    def cell(self, role: str, name: Name | None = None) -> Cell:
        for c in self.cells:
            if c.role == role and (name is None or c.name == name):
                return c
        raise KeyError((role, name))


@dataclass(frozen=True)
class SynthesisResult:
    model: Model
    trace: Trace  # canonical form of the input
    result_type: Type
    cont: Name
    heap: Heap
    k: Term
    gamma: Mapping[Name, Term]  # values of the context's ambient function names
    plan: SynthesisPlan

    @property
    def final(self) -> Name:
        return final_name(self.result_type)

    def config(self, model: Model = Model.HOSC) -> Config:
        """The passive context configuration (run under HOSC by default)."""
        phi = frozenset(self.gamma) | {self.cont, self.final, ERRN}
        return Config(model, {**self.gamma, self.cont: self.k}, {self.cont: self.final}, phi, self.heap)

    def values(self, rho: Assignment | Mapping[str, Term]) -> dict[str, Term]:
        """Closed values for the term's free variables, given the abstract
        values the term side sees."""
        vals = rho.values if isinstance(rho, Assignment) else rho
        return {x: recompose(a, dict(self.gamma)) for x, a in vals.items()}

    def describe(self) -> str:
        lines = [f"model {self.model}", f"continuation {self.cont.short()} -> final@{self.result_type}",
                 f"K = {show_term(self.k)}"]
        for n in sorted(self.gamma, key=Name.sort_key):
            lines.append(f"{n.short()} = {show_term(self.gamma[n])}")
        for c in self.plan.cells:
            lines.append(f"{c.label} ({_loc_text(c.loc)} : {RefT(c.type)}) = {show_term(self.heap.read(c.loc))}")
        return "\n".join(lines)


def _loc_text(l: Loc) -> str:
    return f"l{l.region}{l.idx}"


# -- shared pieces ------------------------------------------------------------

def omega_at(t: Type) -> Term:
    """A divergent term of type t."""
    return App(Fix("w", "z", UNIT, t, App(Var("w"), Var("z"))), UNIT_V)


def _seqs(*parts: Term) -> Term:
    *init, last = parts
    for p in reversed(init):
        last = seq(p, last)
    return last


def _leaves(a: Term, at: Term):
    """(projection of `at`, leaf) for every leaf of the abstract value a."""
    match a:
        case Pair(l, r):
            yield from _leaves(l, Proj(1, at))
            yield from _leaves(r, Proj(2, at))
        case _:
            yield at, a


def _checks(a: Term, x: Term) -> list[Term]:
    """Diverge unless the base constants of x agree with those of a."""
    out = []
    for path, leaf in _leaves(a, x):
        if isinstance(leaf, (IntLit, BoolLit)):
            out.append(If(BinOp("=", path, leaf), UNIT_V, omega_at(UNIT)))
    return out


@dataclass
class _Layout:
    """Who introduced which name, and which continuation is active where."""

    t: Trace
    final: Name
    cont: Name
    phi: list[Name]
    p_funs: list[Name]
    p_conts: list[Name]
    o_funs: list[Name]
    o_conts: list[Name]
    xi: dict[Name, Name]        # context continuation -> where it returns
    active: list[Name]          # active continuation after each O-action


def _layout(t: Trace, final: Name) -> _Layout:
    conts = [n for n in t.ambient_p if n.is_cont]
    if len(conts) != 1:
        raise SynthesisError("the context must own exactly one continuation name at the start")
    c = conts[0]
    phi = sorted((n for n in t.ambient_p if n.is_fun), key=Name.sort_key)
    for n in t.ambient_o:
        if not (n.is_final or n.is_err):
            raise SynthesisError(f"the term side may only own final names and errn, not {n.short()}")
    p_funs, p_conts, o_funs, o_conts = list(phi), [c], [], []
    xi = {c: final}
    active = []
    for i, a in enumerate(t):
        if a.polarity == "O":
            cur = a.cont if a.is_question else xi[a.subject]
            active.append(cur)
            o_funs += [n for n in a.introduced() if n.is_fun]
            o_conts += [n for n in a.introduced() if n.is_cont]
        else:
            p_funs += [n for n in a.introduced() if n.is_fun]
            if a.is_question:
                p_conts.append(a.cont)
                xi[a.cont] = active[-1]
    return _Layout(t, final, c, phi, p_funs, p_conts, o_funs, o_conts, xi, active)


def _check_trace(t: Trace, model: Model, final: Name) -> Trace:
    if len(t) % 2:
        raise SynthesisError("synthesis needs an even-length trace")
    if t.actions and t[0].polarity != "O":
        raise SynthesisError("synthesis needs a trace starting with an O-action")
    t = Trace(t.actions, t.ambient_o | {final, ERRN}, t.ambient_p)
    try:
        check_well_formed(t)
    except TraceError as e:
        raise SynthesisError(f"ill-formed trace: {e}") from None
    for a in t:
        if a.polarity == "O" and a.is_answer and a.subject.is_final:
            raise SynthesisError("O cannot answer a final continuation")
    checks = []
    if model.visible:
        checks.append(("P-visible", p_visible(t)))
    if model.bracketed:
        checks.append(("P-bracketed", p_bracketed(t, final)))
    for what, v in checks:
        if not v:
            raise SynthesisError(f"trace is not {what}: {v.reason}", t[: v.violation + 1])
    return canonicalize(t, t.ambient)


# -- cell construction (HOSC, HOS) -------------------------------------------

def _cells(lay: _Layout, control: bool) -> tuple[Heap, Term, dict[Name, Term], SynthesisPlan]:
    t = lay.t
    cells: list[Cell] = []

    def add(role, names, ty):
        for j, n in enumerate(names):
            cells.append(Cell(role, j, n, Loc(len(cells), "o"), ty(n)))

    add("fp", lay.p_funs, lambda n: n.type)
    add("cp", lay.p_conts, lambda n: Arrow(n.type, lay.xi[n].type))
    add("fo", lay.o_funs, lambda n: n.type)
    if control:
        add("co", lay.o_conts, lambda n: ContT(n.type))
    by = {(c.role, c.name): c for c in cells}

    def via(cell: Cell) -> Term:
        return Lam("x", cell.type.arg, App(Deref(cell.loc), Var("x")))

    def value_of(a: Term) -> Term:
        return replace_names(a, lambda n: via(by["fp", n]) if ("fp", n) in by else None)

    def follow_up(p: Action) -> Term:
        v = value_of(p.payload)
        if p.is_answer:
            if not control:
                return v
            s = p.subject
            target = ContV(s.type, HOLE, s) if s.is_final else Deref(by["co", s].loc)
            return Throw(v, target)
        callee = FName(ERRN) if p.subject.is_err else Deref(by["fo", p.subject].loc)
        return App(via(by["cp", p.cont]), App(callee, v))

    def savefun(a: Term) -> list[Term]:
        return [Assign(by["fo", leaf.name].loc, path) for path, leaf in _leaves(a, Var("x"))
                if isinstance(leaf, FName)]

    code_cells = [c for c in cells if c.role in ("fp", "cp")]
    contents = {c.loc: via(c) for c in code_cells}  # i = n: every use diverges
    for i in range(len(t) // 2 - 1, -1, -1):
        o, p = t[2 * i], t[2 * i + 1]
        setheap = [Assign(c.loc, contents[c.loc]) for c in code_cells]
        after = follow_up(p)
        now = {c.loc: via(c) for c in code_cells}
        if o.is_answer:
            cell = by["cp", o.subject]
            body = _seqs(*_checks(o.payload, Var("x")), *savefun(o.payload), *setheap, after)
        else:
            cell = by["fp", o.subject]
            rest = [*setheap, after]
            if control:
                rest = [Callcc("y", o.cont.type, _seqs(Assign(by["co", o.cont].loc, Var("y")), *rest))]
            body = _seqs(*_checks(o.payload, Var("x")), *savefun(o.payload), *rest)
        now[cell.loc] = Lam("x", cell.type.arg, body)
        contents = now

    init = dict(contents)
    for c in cells:
        if c.role == "fo":
            init[c.loc] = via(c)
        elif c.role == "co":
            init[c.loc] = ContV(c.type.answer, App(Lam("x", c.type.answer, omega_at(lay.final.type)), HOLE), lay.final)
    heap = Heap({c.loc: init[c.loc] for c in cells}, "o", {c.loc: c.type for c in cells})
    gamma = {f: via(by["fp", f]) for f in lay.phi}
    k = App(via(by["cp", lay.cont]), HOLE)
    return heap, k, gamma, SynthesisPlan("cells", tuple(cells))


# -- clock construction (GOSC, GOS) ------------------------------------------

def _clock(lay: _Layout, control: bool) -> tuple[Heap, Term, dict[Name, Term], SynthesisPlan]:
    t = lay.t
    tick = Loc(0, "o")
    owned = lay.phi + [lay.cont] + [n for a in t if a.polarity == "P" for n in a.introduced()]
    var = {n: f"x{i}" for i, n in enumerate(owned)}
    uses: dict[Name, list[int]] = {n: [] for n in owned}
    for u in range(1, len(t) // 2 + 1):
        uses[t[2 * u - 2].subject].append(u)
    arms: dict[int, Term] = {}
    memo: dict[Name, Term] = {}

    def step_code(u: int, x: str) -> Term:
        o, p = t[2 * u - 2], t[2 * u - 1]
        mine = set(p.introduced())
        v = replace_names(p.payload, lambda n: value(n) if n in mine else None)
        if p.is_answer:
            m = Throw(v, ContV(p.subject.type, HOLE, p.subject)) if control else v
        else:
            m = plug(value(p.cont), App(FName(p.subject), v))
        # names O just introduced: projections of the argument, the captured continuation
        proj = {leaf.name: path for path, leaf in _leaves(o.payload, Var(x)) if isinstance(leaf, FName)}
        k = f"k{u}"
        capture = control and o.is_question

        def visit(s: Term):
            match s:
                case FName(n) if n in proj:
                    return proj[n]
                case ContV(_, ctx, n) if capture and n == o.cont and ctx == HOLE:
                    return Var(k)
            return None

        m = transform(m, visit)
        if capture:
            m = Callcc(k, o.cont.type, m)
        return _seqs(*_checks(o.payload, Var(x)), m)

    def value(n: Name) -> Term:
        if n in memo:
            return memo[n]
        x = var[n]
        res = n.type.res if n.is_fun else lay.xi[n].type
        dispatch = omega_at(res)
        for u in reversed(uses[n]):
            arms[u] = step_code(u, x)
            dispatch = If(BinOp("=", Deref(tick), IntLit(u)), arms[u], dispatch)
        body = seq(Assign(tick, BinOp("+", Deref(tick), IntLit(1))), dispatch)
        memo[n] = Lam(x, n.type.arg, body) if n.is_fun else App(Lam(x, n.type, body), HOLE)
        return memo[n]

    gamma = {f: value(f) for f in lay.phi}
    k = value(lay.cont)
    cell = Cell("tick", 0, None, tick, INT)
    heap = Heap({tick: IntLit(0)}, "o", {tick: cell.type})
    return heap, k, gamma, SynthesisPlan("clock", (cell,), dict(sorted(arms.items())))


# -- entry points ---------------------------------------------------------------

def synthesize_context(t: Trace, model: Model = Model.HOSC, result_type: Type = UNIT) -> SynthesisResult:
    """Build (h, K, γ) from the model's syntax realizing exactly the even
    prefixes of t. `result_type` is the answer type of the final continuation
    the context returns to."""
    final = final_name(result_type)
    t = _check_trace(t, model, final)
    lay = _layout(t, final)
    control = model in (Model.HOSC, Model.GOSC)
    build = _clock if model.visible else _cells
    heap, k, gamma, plan = build(lay, control)
    return SynthesisResult(model, t, result_type, lay.cont, heap, k, gamma, plan)


def synthesized_types(r: SynthesisResult) -> set[Type]:
    """Every type used in typing h, K and γ. Raises TypeCheckError when the
    artifacts are ill-typed."""
    env = TypingEnv(locs=dict(r.heap.types))
    seen: set[Type] = {RefT(ty) for ty in r.heap.types.values()}
    for loc, v in r.heap.cells.items():
        tv = infer_type(env, v, seen)
        if not is_subtype(tv, r.heap.types[loc]):
            raise TypeCheckError(f"cell {_loc_text(loc)} holds {tv}, declared {r.heap.types[loc]}")
    for n, v in r.gamma.items():
        tv = infer_type(env, v, seen)
        if not is_subtype(tv, n.type):
            raise TypeCheckError(f"{n.short()} is bound to a value of type {tv}")
    tk = infer_context_type(env, r.k, r.cont.type, seen)
    if not is_subtype(tk, r.result_type):
        raise TypeCheckError(f"K yields {tk}, expected {r.result_type}")
    return seen


def fragment_models(r: SynthesisResult) -> set[Model]:
    return fragment_of(synthesized_types(r))


def uses_control(r: SynthesisResult) -> bool:
    terms = [r.k, *r.gamma.values(), *r.heap.cells.values()]
    return any(isinstance(s, (Callcc, Throw, ContV)) for m in terms for s in walk(m))


@dataclass(frozen=True)
class SynthesisReport:
    ok: bool
    expected: tuple[Trace, ...]
    missing: tuple[Trace, ...]
    extra: tuple[Trace, ...]
    models: frozenset[Model]
    type_error: str = ""

    def __str__(self) -> str:
        if self.ok:
            return f"ok: {len(self.expected)} even prefixes realized exactly"
        lines = ["FAILED"]
        if self.type_error:
            lines.append(f"  ill-typed: {self.type_error}")
        for tr in self.missing:
            lines.append(f"  missing: {tr}")
        for tr in self.extra:
            lines.append(f"  extra: {tr}")
        if not self.type_error and not self.missing and not self.extra:
            lines.append(f"  syntax outside the fragment (fits {', '.join(sorted(m.value for m in self.models))})")
        return "\n".join(lines)


def _ints_of(t: Trace) -> set[int]:
    return {s.value for a in t for s in walk(a.payload) if isinstance(s, IntLit)}


def verify_synthesis(t: Trace, model: Model, result: SynthesisResult, fuel: int = DEFAULT_FUEL) -> SynthesisReport:
    """Enumerate the HOSC traces of the synthesized configuration up to |t|
    and compare the even ones with the canonical even prefixes of t."""
    final = result.final
    t = Trace(t.actions, t.ambient_o | {final, ERRN}, t.ambient_p)
    canon = canonicalize(t, t.ambient)
    expected = [canon[:i] for i in range(0, len(canon) + 1, 2)]
    try:
        models = frozenset(fragment_models(result))
        err = ""
    except TypeCheckError as e:
        models, err = frozenset(), str(e)
    ints = tuple(sorted(set(DEFAULT_INTS) | _ints_of(t)))
    got = enumerate_traces(result.config(), Bounds(depth=len(t), fuel=fuel, ints=ints))
    want = {tr.actions for tr in expected}
    have = {tr.actions for tr in got.even()}
    amb = result.config().ambient()
    missing = tuple(tr for tr in expected if tr.actions not in have)
    extra = tuple(Trace(a, *amb) for a in sorted(have - want, key=lambda a: (len(a), str(Trace(a)))))
    ok = not missing and not extra and not err and model in models
    return SynthesisReport(ok, tuple(expected), missing, extra, models, err)


# -- source form ------------------------------------------------------------------

def context_source(r: SynthesisResult, rho: Assignment | Mapping[str, Term]) -> str:
    """A source-level context (let-prefix building the heap and the values
    of the free variables, then the evaluation context). Only available for
    the control-free constructions, whose artifacts contain no continuation
    literals."""
    if uses_control(r):
        raise SynthesisError(f"a {r.model} context uses continuation literals and has no source form")
    vals = rho.values if isinstance(rho, Assignment) else dict(rho)
    taken = set(vals)
    label = {}
    for c in r.plan.cells:
        v = c.label
        while v in taken:
            v += "_"
        label[c.loc] = v

    def visit(s: Term):
        match s:
            case Loc():
                return Var(label[s])
            case FName(n) if n.is_err:
                return Var("err")
            case FName(n):
                raise SynthesisError(f"name {n.short()} has no source form")
        return None

    def src(m: Term) -> Term:
        return transform(m, visit)

    body = src(r.k)
    for x in reversed(list(vals)):
        body = let(x, src(recompose(vals[x], dict(r.gamma))), body)
    fills = [Assign(Var(label[c.loc]), src(r.heap.read(c.loc))) for c in r.plan.cells
             if not isinstance(r.heap.read(c.loc), IntLit)]
    if fills:
        body = _seqs(*fills, body)
    for c in reversed(r.plan.cells):
        init = r.heap.read(c.loc)
        if not isinstance(init, IntLit):
            init = Lam("x", c.type.arg, omega_at(c.type.res))
        body = let(label[c.loc], NewRef(init), body)
    return show_term(body)


__all__ = [
    "Cell", "SynthesisError", "SynthesisPlan", "SynthesisReport", "SynthesisResult", "context_source",
    "fragment_models", "omega_at", "synthesize_context", "synthesized_types", "uses_control",
    "verify_synthesis",
]
