"""Bounded trace enumeration and the decisions built on it: inclusion,
complete-trace inclusion and shortest distinguishing traces."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .avals import DEFAULT_INTS, Assignment, all_assignments
from .lts import Config, Diverged, enumerate_o_moves, init_term_config, p_transition
from .machine import DEFAULT_FUEL
from .names import Fresh, Name
from .syntax import Term
from .traces import Action, Trace, complete
from .types import Model, Type, join, settle
from .typing import TypeCheckError, TypingEnv, check_cr_free, infer_type


class BoundaryError(ValueError):
    """The term is ill-typed or not cr-free at its boundary."""


@dataclass(frozen=True)
class Bounds:
    depth: int = 8
    fuel: int = DEFAULT_FUEL
    ints: tuple[int, ...] = DEFAULT_INTS
    exhaustive: bool = False

    def __post_init__(self):
        if self.depth < 0 or self.fuel < 1 or not self.ints:
            raise ValueError("need depth >= 0, fuel >= 1 and a nonempty integer domain")


# terminal statuses of an enumerated trace
PASSIVE = "passive"      # O to move (possibly with no legal move)
DIVERGED = "diverged"    # P never reaches a visible action
CUT = "cut"              # depth bound reached with P to move
ACTIVE = "active"        # P moves next (extended below)


@dataclass
class TraceSet:
    model: Model
    root: Config
    bounds: Bounds
    status: dict[Trace, str] = field(default_factory=dict)

    @property
    def traces(self) -> set[Trace]:
        return set(self.status)

    def __contains__(self, t: Trace) -> bool:
        return t in self.status

    def __len__(self) -> int:
        return len(self.status)

    def sorted(self) -> list[Trace]:
        return sorted(self.status, key=trace_order)

    def even(self) -> set[Trace]:
        return {t for t in self.status if len(t) % 2 == 0}


def trace_order(t: Trace):
    return (len(t), str(t), "\n".join(a.wire() for a in t))


def enumerate_traces(cfg: Config, bounds: Bounds = Bounds()) -> TraceSet:
    out = TraceSet(cfg.model, cfg, bounds)
    amb_o, amb_p = cfg.ambient()

    def go(c: Config, acts: tuple[Action, ...]):
        t = Trace(acts, amb_o, amb_p)
        if c.active:
            if len(acts) >= bounds.depth:
                out.status[t] = CUT
                return
            step = p_transition(c, bounds.fuel)
            if isinstance(step, Diverged):
                out.status[t] = DIVERGED
                return
            out.status[t] = ACTIVE
            go(step.config, acts + (step.action,))
            return
        out.status[t] = PASSIVE
        if len(acts) >= bounds.depth:
            return
        for act, nxt in enumerate_o_moves(c, bounds.ints):
            go(nxt, acts + (act,))

    go(cfg, ())
    return out


# -- terms at their boundary ------------------------------------------------------

def boundary_type(gamma: Mapping[str, Type], *terms: Term) -> Type:
    """The common boundary type of the terms (their join, with the internal
    bottom type read as Unit). Raises BoundaryError when they are not cr-free."""
    env = TypingEnv(vars=dict(gamma))
    t = None
    for m in terms:
        try:
            tm = infer_type(env, m)
        except TypeCheckError as e:
            raise BoundaryError(str(e)) from None
        j = tm if t is None else join(t, tm)
        if j is None:
            raise BoundaryError(f"terms have incompatible types {t} and {tm}")
        t = j
    t = settle(t)
    for m in terms:
        if not check_cr_free(env, m, t):
            raise BoundaryError(f"term is not cr-free at boundary type {t}")
    return t


@dataclass(frozen=True)
class Root:
    rho: Assignment
    cont: Name

    def __str__(self) -> str:
        return f"rho = {self.rho}, c = {self.cont.short()}"


def roots(gamma: Mapping[str, Type], t: Type, bounds: Bounds) -> list[Root]:
    out = []
    for rho in all_assignments(dict(gamma), Fresh(), bounds.ints, bounds.exhaustive):
        c, _ = Fresh.after(rho.names()).cont(t)
        out.append(Root(rho, c))
    return out


def term_trace_sets(m: Term, gamma: Mapping[str, Type], model: Model, bounds: Bounds = Bounds(),
                    boundary: Type | None = None) -> list[tuple[Root, TraceSet]]:
    t = boundary if boundary is not None else boundary_type(gamma, m)
    return [(r, enumerate_traces(init_term_config(m, r.rho, r.cont, model), bounds)) for r in roots(gamma, t, bounds)]


@dataclass(frozen=True)
class Inclusion:
    included: bool
    witness: Trace | None = None
    root: Root | None = None
    depth: int = 0

    def __bool__(self) -> bool:
        return self.included

    def __str__(self) -> str:
        if self.included:
            return f"included up to depth {self.depth}"
        return f"not included: {self.witness} ({self.root})"


def _shortest(ts) -> Trace | None:
    ts = sorted(ts, key=trace_order)
    return ts[0] if ts else None


def trace_included(m1: Term, m2: Term, gamma: Mapping[str, Type], model: Model, bounds: Bounds = Bounds(),
                   complete_only: bool = False) -> Inclusion:
    t = boundary_type(gamma, m1, m2)
    left = term_trace_sets(m1, gamma, model, bounds, t)
    right = term_trace_sets(m2, gamma, model, bounds, t)
    for (r, s1), (_, s2) in zip(left, right):
        extra = s1.traces - s2.traces
        if complete_only:
            extra = {x for x in extra if complete(x)}
        w = _shortest(extra)
        if w is not None:
            return Inclusion(False, w, r, bounds.depth)
    return Inclusion(True, depth=bounds.depth)


@dataclass(frozen=True)
class Distinction:
    trace: Trace
    direction: str  # "left": only the first term has it; "right": only the second
    root: Root

    def __str__(self) -> str:
        side = "first" if self.direction == "left" else "second"
        return f"{self.trace} (only the {side} term; {self.root})"


def find_distinguishing_trace(m1: Term, m2: Term, gamma: Mapping[str, Type], model: Model,
                              bounds: Bounds = Bounds(), complete_only: bool = False) -> Distinction | None:
    t = boundary_type(gamma, m1, m2)
    left = term_trace_sets(m1, gamma, model, bounds, t)
    right = term_trace_sets(m2, gamma, model, bounds, t)
    best = None
    for (r, s1), (_, s2) in zip(left, right):
        cands = [(x, "left") for x in s1.traces - s2.traces] + [(x, "right") for x in s2.traces - s1.traces]
        if complete_only:
            cands = [(x, d) for x, d in cands if complete(x)]
        for x, d in cands:
            key = trace_order(x) + (d,)
            if best is None or key < best[0]:
                best = (key, Distinction(x, d, r))
    return None if best is None else best[1]


@dataclass(frozen=True)
class Verdict:
    distinct: bool
    model: Model
    depth: int
    left_only: Trace | None = None
    right_only: Trace | None = None
    root: Root | None = None

    @property
    def label(self) -> str:
        return "DISTINCT" if self.distinct else f"EQUIVALENT-UP-TO-DEPTH {self.depth}"


def compare_terms(m1: Term, m2: Term, gamma: Mapping[str, Type], model: Model, bounds: Bounds = Bounds(),
                  complete_only: bool = False) -> Verdict:
    """Both inclusions at once; the shortest witness of each failing direction."""
    t = boundary_type(gamma, m1, m2)
    left = term_trace_sets(m1, gamma, model, bounds, t)
    right = term_trace_sets(m2, gamma, model, bounds, t)
    for (r, s1), (_, s2) in zip(left, right):
        l_only = s1.traces - s2.traces
        r_only = s2.traces - s1.traces
        if complete_only:
            l_only = {x for x in l_only if complete(x)}
            r_only = {x for x in r_only if complete(x)}
        if l_only or r_only:
            return Verdict(True, model, bounds.depth, _shortest(l_only), _shortest(r_only), r)
    return Verdict(False, model, bounds.depth)


__all__ = [
    "ACTIVE", "Bounds", "BoundaryError", "CUT", "DIVERGED", "Distinction", "Inclusion", "PASSIVE", "Root",
    "TraceSet", "Verdict", "boundary_type", "compare_terms", "enumerate_traces",
    "find_distinguishing_trace", "roots", "term_trace_sets", "trace_included", "trace_order",
]
