"""Actions and traces: justification, views, top continuations, the
visibility / bracketing predicates, duality, canonical renaming and the
line-oriented trace file format."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .names import CONT, ERRN, FUN, Fresh, Name, final_name
from .parser import parse_type
from .printer import show_term
from .syntax import BoolLit, FName, IntLit, Pair, Term, UnitV, UNIT_V, TT, FF
from .avals import aval_names
from .types import UNIT, Arrow, Type


class TraceError(ValueError):
    pass


class Bottom:
    """The 'no pending question' marker (⊥)."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "BOTTOM"

    def __str__(self) -> str:
        return "bot"


BOTTOM = Bottom()


@dataclass(frozen=True, slots=True)
class Action:
    polarity: str  # "P" or "O"
    subject: Name
    payload: Term
    cont: Name | None = None  # set for questions

    @property
    def is_question(self) -> bool:
        return self.cont is not None

    @property
    def is_answer(self) -> bool:
        return self.cont is None

    def introduced(self) -> list[Name]:
        out = aval_names(self.payload)
        if self.cont is not None:
            out.append(self.cont)
        return out

    def dual(self) -> "Action":
        return Action("O" if self.polarity == "P" else "P", self.subject, self.payload, self.cont)

    def rename(self, ren: dict[Name, Name]) -> "Action":
        from .syntax import replace_names

        payload = replace_names(self.payload, lambda n: FName(ren[n]) if n in ren else None)
        return Action(self.polarity, ren.get(self.subject, self.subject), payload,
                      None if self.cont is None else ren.get(self.cont, self.cont))

    def __str__(self) -> str:
        mark = "!" if self.polarity == "P" else "?"
        if self.is_question:
            return f"que{mark} {self.subject.short()} {show_term(self.payload)} {self.cont.short()}"
        return f"ans{mark} {self.subject.short()} {show_term(self.payload)}"

    def wire(self) -> str:
        kind = "QUE" if self.is_question else "ANS"
        s = f"{self.polarity}-{kind} {self.subject} {wire_aval(self.payload)}"
        if self.is_question:
            s += f" {self.cont}"
        return s


@dataclass(frozen=True)
class Trace:
    """An alternating sequence of actions.

    ambient_o holds the names owned by O at the start (P-actions may use
    them), ambient_p the names owned by P (O-actions may use them).
    """

    actions: tuple[Action, ...] = ()
    ambient_o: frozenset[Name] = field(default_factory=frozenset)
    ambient_p: frozenset[Name] = field(default_factory=frozenset)

    def __len__(self) -> int:
        return len(self.actions)

    def __iter__(self) -> Iterator[Action]:
        return iter(self.actions)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Trace(self.actions[i], self.ambient_o, self.ambient_p)
        return self.actions[i]

    def extend(self, *acts: Action) -> "Trace":
        return Trace(self.actions + tuple(acts), self.ambient_o, self.ambient_p)

    @property
    def ambient(self) -> frozenset[Name]:
        return self.ambient_o | self.ambient_p

    def names(self) -> set[Name]:
        out = set(self.ambient)
        for a in self.actions:
            out.add(a.subject)
            out.update(a.introduced())
        return out

    def __str__(self) -> str:
        return " ".join(str(a) for a in self.actions) if self.actions else "(empty)"


def trace_of(actions: Iterable[Action], ambient_o: Iterable[Name] = (), ambient_p: Iterable[Name] = ()) -> Trace:
    return Trace(tuple(actions), frozenset(ambient_o), frozenset(ambient_p))


# -- justification ------------------------------------------------------------

def justifier(t: Trace, i: int) -> int | None:
    """Position of the action that introduced the name a_i uses, or None
    when that name is ambient."""
    if not 0 <= i < len(t):
        raise TraceError(f"position {i} outside a trace of length {len(t)}")
    subj = t[i].subject
    for j in range(i - 1, -1, -1):
        if subj in t[j].introduced():
            return j
    if subj in t.ambient or subj.reserved:
        return None
    raise TraceError(f"name {subj} used at {i} was never introduced")


def _expect_start(t: Trace, polarity: str, what: str):
    if not t.actions or t[0].polarity != polarity:
        raise TraceError(f"{what} needs a nonempty trace starting with a {polarity}-action")
    if len(t) % 2 == 0:
        raise TraceError(f"{what} needs an odd-length trace")


def compute_oav(t: Trace) -> frozenset[Name]:
    """Names O may use after the odd-length, P-started trace t."""
    _expect_start(t, "P", "oav")

    def view(n: int) -> frozenset[Name]:
        a = t[n - 1]
        here = frozenset(a.introduced())
        j = justifier(t, n - 1)
        return here if j is None else view(j) | here

    return view(len(t))


def compute_pav(t: Trace) -> frozenset[Name]:
    """Names P may use after the odd-length, O-started trace t. Every final
    continuation is visible; the materialized ones plus errn are included."""
    _expect_start(t, "O", "pav")
    base = frozenset({ERRN} | {n for n in t.ambient_o if n.is_final})

    def view(n: int) -> frozenset[Name]:
        a = t[n - 1]
        here = frozenset(a.introduced())
        j = justifier(t, n - 1)
        return base | here if j is None else view(j) | here

    return view(len(t))


def in_pav(name: Name, pav: frozenset[Name]) -> bool:
    return name.is_final or name.is_err or name in pav


def compute_topo(t: Trace) -> Name | Bottom:
    _expect_start(t, "P", "Top_O")
    n = len(t)
    while True:
        a = t[n - 1]
        if a.is_question:
            return a.cont
        j = justifier(t, n - 1)
        if j is None:
            return BOTTOM
        n = j


def compute_topp(t: Trace, final: Name | None = None) -> Name:
    _expect_start(t, "O", "Top_P")
    if final is None:
        finals = sorted((x for x in t.ambient_o if x.is_final), key=Name.sort_key)
        final = finals[0] if finals else final_name(UNIT)
    n = len(t)
    while True:
        a = t[n - 1]
        if a.is_question:
            return a.cont
        j = justifier(t, n - 1)
        if j is None:
            return final
        n = j


# -- predicates ---------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    holds: bool
    violation: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.holds


def _starts(t: Trace, polarity: str) -> bool:
    return not t.actions or t[0].polarity == polarity


def o_visible(t: Trace) -> Verdict:
    if not _starts(t, "P"):
        raise TraceError("O-visibility is defined on P-started traces")
    for i in range(1, len(t), 2):
        view = compute_oav(t[:i])
        if t[i].subject not in view:
            return Verdict(False, i, f"{t[i].subject.short()} not O-available")
    return Verdict(True)


def p_visible(t: Trace) -> Verdict:
    if not _starts(t, "O"):
        raise TraceError("P-visibility is defined on O-started traces")
    for i in range(1, len(t), 2):
        view = compute_pav(t[:i])
        if not in_pav(t[i].subject, view):
            return Verdict(False, i, f"{t[i].subject.short()} not P-available")
    return Verdict(True)


def o_bracketed(t: Trace) -> Verdict:
    if not _starts(t, "P"):
        raise TraceError("O-bracketing is defined on P-started traces")
    for i in range(1, len(t), 2):
        if t[i].is_answer:
            top = compute_topo(t[:i])
            if t[i].subject != top:
                return Verdict(False, i, f"top continuation is {_show_top(top)}")
    return Verdict(True)


def p_bracketed(t: Trace, final: Name | None = None) -> Verdict:
    if not _starts(t, "O"):
        raise TraceError("P-bracketing is defined on O-started traces")
    for i in range(1, len(t), 2):
        if t[i].is_answer:
            top = compute_topp(t[:i], final)
            if t[i].subject != top:
                return Verdict(False, i, f"top continuation is {_show_top(top)}")
    return Verdict(True)


def complete(t: Trace) -> Verdict:
    if len(t) % 2 == 0:
        return Verdict(False, None, "even length")
    br = o_bracketed(t)
    if not br:
        return br
    if compute_topo(t) is not BOTTOM:
        return Verdict(False, None, "a question is still pending")
    return Verdict(True)


PREDICATES = {
    "OVisible": o_visible,
    "PVisible": p_visible,
    "OBracketed": o_bracketed,
    "PBracketed": p_bracketed,
    "Complete": complete,
}


def check_predicate(t: Trace, p: str) -> Verdict:
    return PREDICATES[p](t)


def _show_top(top) -> str:
    return str(top) if top is BOTTOM else top.short()


# -- well-formedness, duality, renaming ---------------------------------------

def check_well_formed(t: Trace) -> None:
    """Raise TraceError unless t alternates, introduces every name once and
    only uses names owned by the other side."""
    owner: dict[Name, str] = {n: "O" for n in t.ambient_o}
    owner.update({n: "P" for n in t.ambient_p})
    for i, a in enumerate(t):
        if i and t[i - 1].polarity == a.polarity:
            raise TraceError(f"polarities do not alternate at {i}")
        other = "O" if a.polarity == "P" else "P"
        subj_owner = owner.get(a.subject)
        if subj_owner is None and a.subject.reserved:
            subj_owner = "O" if a.polarity == "P" else None
        if subj_owner != other:
            raise TraceError(f"action {i} uses {a.subject} which {other} does not own")
        if a.is_question:
            if not a.subject.is_fun or not isinstance(a.subject.type, Arrow):
                raise TraceError(f"question {i} on a non-function name")
            if a.cont.type != a.subject.type.res or not a.cont.is_cont:
                raise TraceError(f"question {i}: continuation type mismatch")
            arg_type = a.subject.type.arg
        else:
            if not a.subject.is_cont:
                raise TraceError(f"answer {i} on a non-continuation name")
            arg_type = a.subject.type
        from .avals import is_aval

        if not is_aval(a.payload, arg_type):
            raise TraceError(f"action {i}: payload does not have type {arg_type}")
        for n in a.introduced():
            if n in owner or n.reserved:
                raise TraceError(f"name {n} introduced twice (action {i})")
            owner[n] = a.polarity


def dualize(t: Trace) -> Trace:
    return Trace(tuple(a.dual() for a in t), t.ambient_p, t.ambient_o)


def canonicalize(t: Trace, fixed: Iterable[Name] | None = None) -> Trace:
    """Rename introduced names in order of introduction onto the canonical
    allocator sequence (counters start after the fixed names)."""
    fixed = set(t.ambient if fixed is None else fixed)
    fresh = Fresh.after(fixed)
    ren: dict[Name, Name] = {}
    for a in t:
        for n in a.introduced():
            if n in fixed or n in ren:
                continue
            if n.is_fun:
                ren[n], fresh = fresh.fun(n.type)
            else:
                ren[n], fresh = fresh.cont(n.type)
    return Trace(tuple(a.rename(ren) for a in t), t.ambient_o, t.ambient_p)


def context_witness(t: Trace, result_type: Type = UNIT) -> Trace:
    """t^⊥ followed by a call to errn: the context-side trace a distinguishing
    context must realize when it observes t."""
    d = dualize(t)
    fresh = Fresh.after(d.names())
    c, _ = fresh.cont(UNIT)
    d = Trace(d.actions, d.ambient_o | {ERRN, final_name(result_type)}, d.ambient_p)
    if len(d) % 2 == 1:
        return d.extend(Action("P", ERRN, UNIT_V, c))
    return d


# -- text format ----------------------------------------------------------------

def wire_aval(a: Term) -> str:
    match a:
        case UnitV():
            return "()"
        case BoolLit(b):
            return "tt" if b else "ff"
        case IntLit(n):
            return str(n)
        case FName(n):
            return str(n)
        case Pair(x, y):
            return f"({wire_aval(x)},{wire_aval(y)})"
    raise TraceError(f"not an abstract value: {a}")


class _Reader:
    def __init__(self, s: str, lineno: int):
        self.s, self.i, self.lineno = s, 0, lineno

    def error(self, msg: str):
        raise TraceError(f"line {self.lineno}, column {self.i + 1}: {msg}")

    def skip(self):
        while self.i < len(self.s) and self.s[self.i] == " ":
            self.i += 1

    def peek(self) -> str:
        self.skip()
        return self.s[self.i] if self.i < len(self.s) else ""

    def type_atom(self) -> Type:
        self.skip()
        start = self.i
        if self.peek() == "(":
            depth = 0
            while self.i < len(self.s):
                ch = self.s[self.i]
                self.i += 1
                depth += ch == "("
                depth -= ch == ")"
                if depth == 0:
                    break
        else:
            m = re.compile(r"[A-Za-z]+").match(self.s, self.i)
            if not m:
                self.error("expected a type")
            self.i = m.end()
        try:
            return parse_type(self.s[start:self.i])
        except ValueError as e:
            self.error(str(e))

    def name(self) -> Name:
        self.skip()
        m = re.compile(r"errn|final@|([fc])(\d+)@").match(self.s, self.i)
        if not m:
            self.error("expected a name")
        self.i = m.end()
        if m.group() == "errn":
            return ERRN
        t = self.type_atom()
        if m.group() == "final@":
            return final_name(t)
        return Name(FUN if m.group(1) == "f" else CONT, t, int(m.group(2)))

    def aval(self) -> Term:
        ch = self.peek()
        if self.s.startswith("()", self.i):
            self.i += 2
            return UNIT_V
        if ch == "(":
            self.i += 1
            a = self.aval()
            if self.peek() != ",":
                self.error("expected ','")
            self.i += 1
            b = self.aval()
            if self.peek() != ")":
                self.error("expected ')'")
            self.i += 1
            return Pair(a, b)
        m = re.compile(r"tt\b|ff\b|-?\d+").match(self.s, self.i)
        if m:
            self.i = m.end()
            if m.group() == "tt":
                return TT
            if m.group() == "ff":
                return FF
            return IntLit(int(m.group()))
        return FName(self.name())

    def end(self):
        self.skip()
        if self.i != len(self.s):
            self.error("trailing input")


def format_trace(t: Trace) -> str:
    def names(ns):
        return " ".join(str(n) for n in sorted(ns, key=Name.sort_key))

    lines = [f"O-NAMES {names(t.ambient_o)}".rstrip(), f"P-NAMES {names(t.ambient_p)}".rstrip()]
    lines += [a.wire() for a in t]
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> Trace:
    amb_o: set[Name] = set()
    amb_p: set[Name] = set()
    actions = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        r = _Reader(rest, lineno)
        if head in ("O-NAMES", "P-NAMES"):
            target = amb_o if head == "O-NAMES" else amb_p
            while r.peek():
                target.add(r.name())
            continue
        m = re.fullmatch(r"([PO])-(ANS|QUE)", head)
        if not m:
            raise TraceError(f"line {lineno}: unknown directive {head!r}")
        subj = r.name()
        payload = r.aval()
        cont = r.name() if m.group(2) == "QUE" else None
        r.end()
        actions.append(Action(m.group(1), subj, payload, cont))
    t = trace_of(actions, amb_o, amb_p)
    check_well_formed(t)
    return t


def show_name_set(ns: Iterable[Name]) -> str:
    return "{" + ", ".join(n.short() for n in sorted(ns, key=Name.sort_key)) + "}"


__all__ = [
    "Action", "BOTTOM", "Bottom", "Trace", "TraceError", "Verdict", "canonicalize",
    "check_predicate", "check_well_formed", "complete", "compute_oav", "compute_pav",
    "compute_topo", "compute_topp", "context_witness", "dualize", "format_trace",
    "in_pav", "justifier", "o_bracketed", "o_visible", "p_bracketed", "p_visible",
    "parse_trace", "show_name_set", "trace_of", "wire_aval",
]
