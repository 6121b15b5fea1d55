"""Closed interaction of a term configuration with a context configuration,
and the map θ back to plain programs. Used as an independent oracle for the
trace semantics."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Mapping

from .avals import aval_decompose, aval_names
from .lts import Config, init_context_config
from .machine import (
    DEFAULT_FUEL, Callback, ErrStuck, Heap, MachineState, Value, classify, observes, run_base, step_base,
    step_ext,
)
from .names import ERRN, Fresh, Name
from .parser import parse_context
from .printer import show_term
from .syntax import (
    HOLE, App, ContV, FName, Lam, Term, Var, fill_hole, has_hole, is_eval_context, plug, subst, transform,
)
from .traces import Action, Trace
from .types import UNIT, Arrow, Type, settle
from .typing import TypingEnv, infer_type


class CompositeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Composite:
    term: Term
    cont: Name
    gamma_p: Mapping[Name, Term]
    gamma_o: Mapping[Name, Term]
    xi: Mapping[Name, Name]
    phi: frozenset[Name]
    heap_p: Heap
    heap_o: Heap
    ambient_o: frozenset[Name] = field(default_factory=frozenset)
    ambient_p: frozenset[Name] = field(default_factory=frozenset)

    @property
    def p_runs(self) -> bool:
        """The term side evaluates when the current continuation belongs to
        the context."""
        return self.cont in self.gamma_o

    def __str__(self) -> str:
        side = "P" if self.p_runs else "O"
        return f"<{side}: {show_term(self.term)} @ {self.cont.short()}; hP = {self.heap_p}; hO = {self.heap_o}>"


def validity_errors(d: Composite) -> list[str]:
    errs = []
    dp, do = set(d.gamma_p), set(d.gamma_o)
    if dp & do:
        errs.append("environments overlap")
    if any(n.is_final for n in dp | do):
        errs.append("a final name has a definition")
    finals = {n for n in d.phi if n.is_final}
    if dp | do | finals | {ERRN} != set(d.phi):
        errs.append("names and definitions disagree")
    for c, c2 in d.xi.items():
        if c in dp and c2 not in do and not c2.is_final:
            errs.append(f"xi({c.short()}) is not owned by the context")
        if c in do and c2 not in dp and not c2.is_final:
            errs.append(f"xi({c.short()}) is not owned by the term")
    for c in d.xi:
        seen = {c}
        x = c
        while not x.is_final:
            x = d.xi.get(x)
            if x is None or x in seen:
                errs.append(f"continuation chain from {c.short()} does not reach a final name")
                break
            seen.add(x)
    if d.heap_p.cells.keys() & d.heap_o.cells.keys():
        errs.append("heaps overlap")
    return errs


def merge(term_cfg: Config, ctx_cfg: Config) -> Composite:
    """Combine an active term configuration with the passive configuration of
    a context (or a passive term configuration with an active context)."""
    if term_cfg.active == ctx_cfg.active:
        raise CompositeError("exactly one of the two configurations must be active")
    extra = ctx_cfg.phi - term_cfg.phi
    if term_cfg.phi - ctx_cfg.phi or not extra or any(not (n.is_final or n.is_err) for n in extra) or ERRN not in extra:
        raise CompositeError("name sets are not compatible: the context must know the term's names plus errn and final names")
    act = term_cfg if term_cfg.active else ctx_cfg
    xi = {k: v for k, v in {**term_cfg.xi, **ctx_cfg.xi}.items() if isinstance(v, Name)}
    d = Composite(act.term, act.cont, dict(term_cfg.gamma), dict(ctx_cfg.gamma), xi, ctx_cfg.phi,
                  term_cfg.heap, ctx_cfg.heap.with_region("o"), *term_cfg.ambient())
    errs = validity_errors(d)
    if errs:
        raise CompositeError("; ".join(errs))
    return d


# -- one step ---------------------------------------------------------------------

@dataclass(frozen=True)
class Stop:
    kind: str  # "ter" or "err"
    config: Composite


def composite_step(d: Composite) -> tuple[Action | None, Composite] | Stop:
    """One step; the label is None for silent steps. A Stop is returned at
    the final configurations (value at a final name, or a call to errn)."""
    p = d.p_runs
    heap = d.heap_p if p else d.heap_o
    s = MachineState(d.term, d.cont, heap)
    nxt = step_ext(s)
    if nxt is not None:
        if p:
            return None, replace(d, term=nxt.term, cont=nxt.cont, heap_p=nxt.heap)
        return None, replace(d, term=nxt.term, cont=nxt.cont, heap_o=nxt.heap)
    out = classify(s)
    mine, theirs = (d.gamma_p, d.gamma_o) if p else (d.gamma_o, d.gamma_p)
    pol = "P" if p else "O"
    fresh = Fresh.after(d.phi)
    match out:
        case Value(v, c, _):
            if c.is_final:
                return Stop("ter", d)
            a, g, _ = aval_decompose(v, c.type, fresh)
            mine2 = {**mine, **g}
            d2 = _sides(d, p, mine2, term=plug(theirs[c], a), cont=d.xi[c],
                        phi=d.phi | set(aval_names(a)))
            return Action(pol, c, a), d2
        case ErrStuck():
            return Stop("err", d)
        case Callback(k, f, arg, c, _):
            a, g, fresh = aval_decompose(arg, f.type.arg, fresh)
            c2, _ = fresh.cont(f.type.res)
            mine2 = {**mine, **g, c2: k}
            d2 = _sides(d, p, mine2, term=App(theirs[f], a), cont=c2,
                        phi=d.phi | set(aval_names(a)) | {c2}, xi={**d.xi, c2: c})
            return Action(pol, f, a, c2), d2
    raise AssertionError(out)


def _sides(d: Composite, p: bool, mine, **kw) -> Composite:
    if p:
        return replace(d, gamma_p=mine, **kw)
    return replace(d, gamma_o=mine, **kw)


# -- θ ------------------------------------------------------------------------------

def theta(d: Composite) -> tuple[Term, Heap]:
    """The plain program the composite configuration stands for: every
    function name is replaced by its definition, every named continuation
    by the full context it denotes, errn by the err variable."""
    gamma = {**d.gamma_p, **d.gamma_o}
    funs: dict[Name, Term] = {}
    ctxs: dict[Name, Term] = {}
    busy: set[Name] = set()

    def resolve(m: Term) -> Term:
        def visit(s: Term):
            match s:
                case FName(n):
                    return fun(n)
                case ContV(t, k, c) if c is not None:
                    return ContV(t, plug(full(c), resolve(k)), None)
            return None

        return transform(m, visit)

    def enter(n: Name):
        if n in busy:
            raise CompositeError(f"cyclic definitions through {n.short()}")
        busy.add(n)

    def fun(n: Name) -> Term:
        if n.is_err:
            return Var("err")
        if n not in funs:
            if n not in gamma:
                raise CompositeError(f"function name {n.short()} has no definition")
            enter(n)
            funs[n] = resolve(gamma[n])
            busy.discard(n)
        return funs[n]

    def full(c: Name) -> Term:
        if c.is_final:
            return HOLE
        if c not in ctxs:
            if c not in gamma or c not in d.xi:
                raise CompositeError(f"continuation name {c.short()} has no definition")
            enter(c)
            ctxs[c] = plug(full(d.xi[c]), resolve(gamma[c]))
            busy.discard(c)
        return ctxs[c]

    region = "" if d.p_runs else "o"
    heap = d.heap_p.merge(d.heap_o, region).map_values(resolve)
    return plug(full(d.cont), resolve(d.term)), heap


# -- running --------------------------------------------------------------------------

@dataclass
class CompositeRun:
    start: Composite
    labels: list[Action | None] = field(default_factory=list)
    configs: list[Composite] = field(default_factory=list)
    outcome: str = "fuel"  # "ter", "err", "loop" (a configuration repeated) or "fuel"
    theta_failures: list[str] = field(default_factory=list)

    @property
    def trace(self) -> Trace:
        return Trace(tuple(l for l in self.labels if l is not None), self.start.ambient_o, self.start.ambient_p)

    @property
    def steps(self) -> int:
        return len(self.labels)


def _same(a: Composite, b: Composite) -> bool:
    return all(getattr(a, f.name) == getattr(b, f.name) for f in fields(Composite))


def run_composite(d: Composite, fuel: int = DEFAULT_FUEL, check_theta: bool = False,
                  check_validity: bool = False) -> CompositeRun:
    """Run to a final configuration. With check_theta, every silent step
    must be matched by exactly one plain step of θ and every visible step
    must leave θ unchanged; mismatches are collected, not raised."""
    res = CompositeRun(d, configs=[d])
    prev = theta(d) if check_theta else None
    tortoise, power, lam = d, 1, 0
    for _ in range(fuel):
        out = composite_step(d)
        if isinstance(out, Stop):
            res.outcome = out.kind
            if check_theta and step_base(*prev) is not None:
                res.theta_failures.append(f"step {res.steps}: composite stopped but θ can still step")
            return res
        label, d = out
        res.labels.append(label)
        res.configs.append(d)
        if check_validity:
            for e in validity_errors(d):
                res.theta_failures.append(f"step {res.steps}: invalid: {e}")
        if check_theta:
            cur = theta(d)
            if label is None:
                nxt = step_base(*prev)
                if nxt is None or nxt[0] != cur[0] or nxt[1] != cur[1]:
                    res.theta_failures.append(f"step {res.steps}: silent step not matched by θ")
            elif cur[0] != prev[0] or cur[1] != prev[1]:
                res.theta_failures.append(f"step {res.steps}: visible step changed θ")
            prev = cur
        if _same(d, tortoise):
            res.outcome = "loop"
            return res
        lam += 1
        if power == lam:
            tortoise, power, lam = d, power * 2, 0
    return res


@dataclass(frozen=True)
class CompositeObservation:
    verdict: bool
    trace: Trace
    steps: int
    outcome: str

    def __bool__(self) -> bool:
        return self.verdict


def composite_observes(term_cfg: Config, ctx_cfg: Config, kind: str = "ter", fuel: int = DEFAULT_FUEL) -> CompositeObservation:
    if kind not in ("ter", "err"):
        raise ValueError(f"unknown observation kind {kind!r}")
    r = run_composite(merge(term_cfg, ctx_cfg), fuel)
    return CompositeObservation(r.outcome == kind, r.trace, r.steps, r.outcome)


def theta_observes(term_cfg: Config, ctx_cfg: Config, kind: str = "ter", fuel: int = DEFAULT_FUEL):
    m, h = theta(merge(term_cfg, ctx_cfg))
    return observes(m, h, kind, fuel)


# -- hand-written contexts --------------------------------------------------------------

@dataclass(frozen=True)
class ContextSpec:
    """A context given as source text: a chain of lets (evaluated once to
    build the context heap and the values of the term's free variables)
    ending in an evaluation context with one hole `[]`. The free variable
    `err : Unit -> Unit` signals an error."""

    heap: Heap
    k: Term
    values: tuple[tuple[str, Term, Type], ...]
    hole_type: Type
    result_type: Type

    def config(self, c: Name | None = None):
        return init_context_config(self.heap, self.k, self.values, self.hole_type, self.result_type, c=c)


def context_from_source(text: str, hole_type: Type, gamma: Mapping[str, Type] | None = None,
                        fuel: int = DEFAULT_FUEL) -> ContextSpec:
    gamma = dict(gamma or {})
    c = parse_context(text)
    env = TypingEnv(vars={"err": Arrow(UNIT, UNIT), "[hole]": hole_type})
    result = settle(infer_type(env, fill_hole(c, Var("[hole]"))))
    heap = Heap(region="o")
    values: list[tuple[str, Term, Type]] = []
    m = c
    while isinstance(m, App) and isinstance(m.fn, Lam) and m.fn.ty is None and not has_hole(m.arg):
        out = run_base(m.arg, heap, fuel)
        if not isinstance(out, Value):
            raise CompositeError(f"context prefix `{show_term(m.arg)}` does not evaluate to a value")
        heap = out.heap
        x = m.fn.var
        if x in gamma:
            values = [v for v in values if v[0] != x] + [(x, out.term, gamma[x])]
        m = subst(m.fn.body, {x: out.term}) if x != "_" else m.fn.body
    if not is_eval_context(m):
        raise CompositeError("after the let-prefix the hole must sit in an evaluation position")
    missing = set(gamma) - {v[0] for v in values}
    if missing:
        raise CompositeError(f"context does not bind {', '.join(sorted(missing))}")
    order = list(gamma)
    values.sort(key=lambda v: order.index(v[0]))
    return ContextSpec(heap, m, tuple(values), hole_type, result)


__all__ = [
    "Composite", "CompositeError", "CompositeObservation", "CompositeRun", "ContextSpec", "Stop",
    "composite_observes", "composite_step", "context_from_source", "merge", "run_composite",
    "theta", "theta_observes", "validity_errors",
]
