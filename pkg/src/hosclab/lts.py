"""Configurations and transitions of the four interaction systems.

One transition function serves all models. The model only adds
bookkeeping: visible models track the O-available names (`views` records,
for every O-introduced name, the names available when it was introduced;
`avail` holds the set available right now), bracketed models track the
continuation O must answer first (`top`, with ξ also recording O-introduced
continuations).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .avals import DEFAULT_INTS, Assignment, aval_decompose, aval_names, enumerate_avals, is_aval
from .machine import EMPTY_HEAP, Callback, ErrStuck, FuelExhausted, Heap, MachineState, Value, run, DEFAULT_FUEL
from .names import ERRN, Fresh, Name, final_name
from .printer import show_term
from .syntax import App, ContV, FName, Loc, Term, UNIT_V, Var, plug, subst, transform
from .traces import BOTTOM, Action, Bottom, Trace
from .types import Arrow, Model, Type


class IllegalMove(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Config:
    """Active when `term` is set, passive otherwise."""

    model: Model
    gamma: Mapping[Name, Term]
    xi: Mapping[Name, Name | Bottom]
    phi: frozenset[Name]
    heap: Heap = EMPTY_HEAP
    term: Term | None = None
    cont: Name | None = None
    views: Mapping[Name, frozenset[Name]] = field(default_factory=dict)
    avail: frozenset[Name] | None = None
    top: Name | Bottom | None = None

    @property
    def active(self) -> bool:
        return self.term is not None

    def fresh(self) -> Fresh:
        return Fresh.after(self.phi)

    def ambient(self) -> tuple[frozenset[Name], frozenset[Name]]:
        """(names owned by the other side, names owned by this side)."""
        dom = frozenset(self.gamma)
        return self.phi - dom, dom

    def empty_trace(self) -> Trace:
        o, p = self.ambient()
        return Trace((), o, p)

    def describe(self) -> str:
        def nm(x):
            return str(x) if x is BOTTOM else x.short()

        g = ", ".join(f"{n.short()} -> {show_term(v)}" for n, v in _sorted_items(self.gamma))
        x = ", ".join(f"{n.short()} -> {nm(v)}" for n, v in _sorted_items(self.xi))
        p = ", ".join(n.short() for n in sorted(self.phi, key=Name.sort_key))
        parts = [f"gamma = [{g}]", f"xi = [{x}]", f"phi = {{{p}}}", f"heap = {self.heap}"]
        if self.active:
            parts = [f"term = {show_term(self.term)}", f"cont = {self.cont.short()}"] + parts
        if self.avail is not None:
            parts.append("avail = {" + ", ".join(n.short() for n in sorted(self.avail, key=Name.sort_key)) + "}")
        if self.top is not None:
            parts.append(f"top = {nm(self.top)}")
        return "; ".join(parts)


def _sorted_items(m: Mapping[Name, object]):
    return sorted(m.items(), key=lambda kv: kv[0].sort_key())


# -- initial configurations ---------------------------------------------------

def init_term_config(m: Term, rho: Assignment | Mapping[str, Term], c: Name, model: Model = Model.HOSC) -> Config:
    values = rho.values if isinstance(rho, Assignment) else dict(rho)
    names: set[Name] = set()
    for a in values.values():
        names.update(aval_names(a))
    xi = {c: BOTTOM} if model.bracketed else {}
    return Config(model, {}, xi, frozenset(names | {c}), EMPTY_HEAP, subst(m, dict(values)), c)


def upgrade_context_term(m: Term, final: Name) -> Term:
    """Name every bare captured continuation with the final name, turn the
    free `err` variable into errn and move locations to the context region."""

    def visit(s: Term):
        match s:
            case ContV(t, k, None):
                return ContV(t, upgrade_context_term(k, final), final)
            case Var("err"):
                return FName(ERRN)
            case Loc(i, ""):
                return Loc(i, "o")
        return None

    return transform(m, visit)


def init_context_config(heap: Heap, k: Term, values: Sequence[tuple[str, Term, Type]], hole_type: Type,
                        result_type: Type, model: Model = Model.HOSC, c: Name | None = None
                        ) -> tuple[Config, Assignment]:
    """The passive configuration of the context (h, K, γ) and the abstract
    values it feeds to the term's free variables (the term side's ρ)."""
    final = final_name(result_type)
    fresh = Fresh()
    gamma: dict[Name, Term] = {}
    rho: dict[str, Term] = {}
    for x, v, t in values:
        a, g, fresh = aval_decompose(upgrade_context_term(v, final), t, fresh)
        rho[x] = a
        gamma.update(g)
    if c is None:
        c, fresh = fresh.cont(hole_type)
    gamma[c] = upgrade_context_term(k, final)
    cells = {upgrade_context_term(l, final): upgrade_context_term(v, final) for l, v in heap.cells.items()}
    types = {upgrade_context_term(l, final): t for l, t in heap.types.items()}
    h = Heap(cells, "o", types)
    phi = frozenset(gamma) | {final, ERRN}
    cfg = Config(model, gamma, {c: final}, phi, h)
    return cfg, Assignment(rho)


# -- Player ---------------------------------------------------------------------

@dataclass(frozen=True)
class PStep:
    action: Action
    config: Config
    settled: Config  # the active configuration reached by the silent steps
    steps: int


@dataclass(frozen=True)
class Diverged:
    steps: int
    looping: bool = False

    def __str__(self) -> str:
        return "diverges" if self.looping else f"no visible action within {self.steps} steps"


def p_transition(cfg: Config, fuel: int = DEFAULT_FUEL) -> PStep | Diverged:
    if not cfg.active:
        raise ValueError("Player moves from an active configuration only")
    out = run(MachineState(cfg.term, cfg.cont, cfg.heap), fuel)
    fresh = cfg.fresh()
    match out:
        case FuelExhausted(steps, looping):
            return Diverged(steps, looping)
        case Value(v, c, h, steps):
            settled = replace(cfg, term=v, cont=c, heap=h)
            a, g, _ = aval_decompose(v, c.type, fresh)
            new = frozenset(aval_names(a))
            nxt = replace(cfg, term=None, cont=None, heap=h, gamma={**cfg.gamma, **g}, phi=cfg.phi | new)
            if cfg.model.visible:
                nxt = replace(nxt, avail=cfg.views.get(c, frozenset()) | new)
            if cfg.model.bracketed:
                nxt = replace(nxt, top=cfg.xi.get(c, BOTTOM))
            return PStep(Action("P", c, a), nxt, settled, steps)
        case Callback(k, f, arg, c, h, steps):
            return _question(cfg, k, f, arg, c, h, steps, fresh)
        case ErrStuck(k, c, h, steps):
            return _question(cfg, k, ERRN, UNIT_V, c, h, steps, fresh)
    raise AssertionError(out)


def _question(cfg, k, f, arg, c, h, steps, fresh) -> PStep:
    settled = replace(cfg, term=plug(k, App(FName(f), arg)), cont=c, heap=h)
    a, g, fresh = aval_decompose(arg, f.type.arg, fresh)
    c2, _ = fresh.cont(f.type.res)
    new = frozenset(aval_names(a)) | {c2}
    nxt = replace(cfg, term=None, cont=None, heap=h, gamma={**cfg.gamma, **g, c2: k},
                  xi={**cfg.xi, c2: c}, phi=cfg.phi | new)
    if cfg.model.visible:
        nxt = replace(nxt, avail=cfg.views.get(f, frozenset()) | new)
    if cfg.model.bracketed:
        nxt = replace(nxt, top=c2)
    return PStep(Action("P", f, a, c2), nxt, settled, steps)


# -- Opponent -------------------------------------------------------------------

def o_subjects(cfg: Config) -> tuple[list[Name], list[Name]]:
    funs = sorted((n for n in cfg.gamma if n.is_fun), key=Name.sort_key)
    conts = sorted((n for n in cfg.gamma if n.is_cont), key=Name.sort_key)
    return funs, conts


def move_blocker(cfg: Config, subject: Name) -> str | None:
    """Why the model forbids O from using `subject` now (None if allowed)."""
    if subject not in cfg.gamma:
        return f"{subject.short()} is not owned by this side"
    if cfg.model.visible and subject not in (cfg.avail or frozenset()):
        return f"{subject.short()} not O-available"
    if cfg.model.bracketed and subject.is_cont and subject != cfg.top:
        top = cfg.top
        return f"top continuation is {top if top is BOTTOM else top.short()}"
    return None


def enumerate_o_moves(cfg: Config, ints: Sequence[int] = DEFAULT_INTS) -> list[tuple[Action, Config]]:
    if cfg.active:
        raise ValueError("Opponent moves from a passive configuration only")
    fresh = cfg.fresh()
    out = []
    funs, conts = o_subjects(cfg)
    for f in funs:
        if move_blocker(cfg, f):
            continue
        assert isinstance(f.type, Arrow)
        for a in enumerate_avals(f.type.arg, ints, fresh):
            c, _ = Fresh(fresh.next_fun + len(aval_names(a)), fresh.next_cont).cont(f.type.res)
            act = Action("O", f, a, c)
            out.append((act, _successor(cfg, act)))
    for c in conts:
        if move_blocker(cfg, c):
            continue
        for a in enumerate_avals(c.type, ints, fresh):
            act = Action("O", c, a)
            out.append((act, _successor(cfg, act)))
    return out


def apply_o_move(cfg: Config, act: Action) -> Config:
    if cfg.active:
        raise IllegalMove("configuration is active: Player moves next")
    if act.polarity != "O":
        raise IllegalMove("not an Opponent action")
    why = move_blocker(cfg, act.subject)
    if why:
        raise IllegalMove(why)
    want = act.subject.type.arg if act.is_question else act.subject.type
    if act.is_question != act.subject.is_fun:
        raise IllegalMove("questions go to function names, answers to continuation names")
    if not is_aval(act.payload, want):
        raise IllegalMove(f"payload is not an abstract value of type {want}")
    if act.is_question and (not act.cont.is_cont or act.cont.type != act.subject.type.res or act.cont.reserved):
        raise IllegalMove("continuation name has the wrong type")
    for n in act.introduced():
        if n in cfg.phi or n.reserved:
            raise IllegalMove(f"name {n.short()} is not fresh")
    return _successor(cfg, act)


def _successor(cfg: Config, act: Action) -> Config:
    new = frozenset(act.introduced())
    if act.is_question:
        term, cont = App(cfg.gamma[act.subject], act.payload), act.cont
    else:
        term, cont = plug(cfg.gamma[act.subject], act.payload), cfg.xi[act.subject]
    nxt = replace(cfg, term=term, cont=cont, phi=cfg.phi | new, avail=None, top=None)
    if cfg.model.visible:
        nxt = replace(nxt, views={**cfg.views, **{n: cfg.avail for n in new}})
    if cfg.model.bracketed and act.is_question:
        nxt = replace(nxt, xi={**cfg.xi, act.cont: cfg.top})
    return nxt


def replay(cfg: Config, actions: Iterable[Action], fuel: int = DEFAULT_FUEL) -> tuple[Config, list[PStep]]:
    """Drive cfg along the given actions, checking that every Player action
    is the one the configuration produces. Raises IllegalMove otherwise."""
    psteps = []
    for i, act in enumerate(actions):
        if act.polarity == "P":
            if not cfg.active:
                raise IllegalMove(f"action {i}: Player has nothing to play")
            out = p_transition(cfg, fuel)
            if isinstance(out, Diverged):
                raise IllegalMove(f"action {i}: Player {out}")
            if out.action != act:
                raise IllegalMove(f"action {i}: Player plays {out.action}, not {act}")
            psteps.append(out)
            cfg = out.config
        else:
            cfg = apply_o_move(cfg, act)
    return cfg, psteps


@dataclass(frozen=True)
class DerivationRow:
    label: str  # "start", "tau*" for silent steps, or the action
    config: Config

    def __str__(self) -> str:
        return f"{self.label:>16} | {self.config.describe()}"


def derivation(cfg: Config, actions: Iterable[Action], fuel: int = DEFAULT_FUEL) -> list[DerivationRow]:
    """The configurations visited while producing the given actions, with
    one row per run of silent steps and one per action."""
    rows = [DerivationRow("start", cfg)]
    for act in actions:
        if act.polarity == "P" and cfg.active:
            out = p_transition(cfg, fuel)
            if isinstance(out, PStep) and out.steps:
                rows.append(DerivationRow("tau*", out.settled))
        cfg, _ = replay(cfg, [act], fuel)
        rows.append(DerivationRow(str(act), cfg))
    return rows


__all__ = [
    "Config", "DerivationRow", "Diverged", "derivation", "IllegalMove", "PStep", "apply_o_move", "enumerate_o_moves",
    "init_context_config", "init_term_config", "move_blocker", "p_transition", "replay",
    "upgrade_context_term",
]
