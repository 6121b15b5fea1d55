"""Abstract values: the patterns () | tt | ff | n | f | <A,B> exchanged in
actions, their decomposition from values and their bounded enumeration."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Sequence

from .names import Fresh, Name
from .syntax import FF, TT, UNIT_V, BoolLit, FName, IntLit, Pair, Term, UnitV, is_value, replace_names
from .types import Arrow, BoolT, IntT, Prod, Type, UnitT, is_boundary_type

DEFAULT_INTS = (0, 1)


class AValError(ValueError):
    pass


def aval_names(a: Term) -> list[Name]:
    """Names of an abstract value, left to right."""
    match a:
        case FName(n):
            return [n]
        case Pair(x, y):
            return aval_names(x) + aval_names(y)
    return []


def is_aval(a: Term, t: Type) -> bool:
    match a, t:
        case UnitV(), UnitT():
            return True
        case BoolLit(), BoolT():
            return True
        case IntLit(), IntT():
            return True
        case FName(n), Arrow():
            return n.is_fun and n.type == t
        case Pair(x, y), Prod(l, r):
            if not (is_aval(x, l) and is_aval(y, r)):
                return False
            ns = aval_names(a)
            return len(ns) == len(set(ns))
    return False


def aval_decompose(v: Term, t: Type, fresh: Fresh) -> tuple[Term, dict[Name, Term], Fresh]:
    """Split a closed value of boundary type t into an abstract value and a
    substitution from its fresh names back to the functional parts."""
    if not is_boundary_type(t):
        raise AValError(f"type {t} is not cont- and ref-free")
    if not is_value(v):
        raise AValError(f"not a value: {v}")
    gamma: dict[Name, Term] = {}

    def go(v: Term, t: Type, fresh: Fresh):
        match t:
            case UnitT() | BoolT() | IntT():
                return v, fresh
            case Arrow():
                n, fresh = fresh.fun(t)
                gamma[n] = v
                return FName(n), fresh
            case Prod(l, r):
                if not isinstance(v, Pair):
                    raise AValError(f"expected a pair for {t}, got {v}")
                a, fresh = go(v.left, l, fresh)
                b, fresh = go(v.right, r, fresh)
                return Pair(a, b), fresh
        raise AValError(f"cannot decompose at {t}")

    a, fresh = go(v, t, fresh)
    return a, gamma, fresh


def recompose(a: Term, gamma: dict[Name, Term]) -> Term:
    """A{γ}"""
    return replace_names(a, gamma.get)


def enumerate_avals(t: Type, ints: Sequence[int] = DEFAULT_INTS, fresh: Fresh = Fresh()) -> list[Term]:
    """Every abstract value of type t with integers from `ints` and canonical
    fresh names, in left-to-right structural order."""
    if not is_boundary_type(t):
        raise AValError(f"type {t} is not cont- and ref-free")
    ints = sorted(set(ints))

    def leaves(t: Type) -> list[Type]:
        if isinstance(t, Prod):
            return leaves(t.left) + leaves(t.right)
        return [t]

    def choices(t: Type) -> list[Term]:
        match t:
            case UnitT():
                return [UNIT_V]
            case BoolT():
                return [TT, FF]
            case IntT():
                return [IntLit(n) for n in ints]
        return [None]  # arrow: filled with a fresh name below

    slots = leaves(t)
    out = []
    for combo in product(*(choices(s) for s in slots)):
        it = iter(combo)
        f = fresh

        def build(t: Type):
            nonlocal f
            if isinstance(t, Prod):
                left = build(t.left)
                return Pair(left, build(t.right))
            leaf = next(it)
            if leaf is None:
                n, f = f.fun(t)
                return FName(n)
            return leaf

        out.append(build(t))
    return out


@dataclass(frozen=True)
class Assignment:
    """A Γ-assignment: abstract values for the free variables of a term."""

    values: dict[str, Term]

    def names(self) -> list[Name]:
        out = []
        for a in self.values.values():
            out.extend(aval_names(a))
        return out

    def __str__(self) -> str:
        from .printer import show_term

        return "[" + ", ".join(f"{x} -> {show_term(a)}" for x, a in self.values.items()) + "]"


def canonical_assignment(gamma: dict[str, Type], fresh: Fresh = Fresh(), ints: Sequence[int] = DEFAULT_INTS) -> Assignment:
    """Fresh names for functional parts, first enumerated value elsewhere."""
    return all_assignments(gamma, fresh, ints, exhaustive=False)[0]


def all_assignments(gamma: dict[str, Type], fresh: Fresh = Fresh(), ints: Sequence[int] = DEFAULT_INTS,
                    exhaustive: bool = True) -> list[Assignment]:
    per_var = []
    f = fresh
    for t in gamma.values():
        opts = enumerate_avals(t, ints, f)
        per_var.append(opts if exhaustive else opts[:1])
        f = Fresh(f.next_fun + _arrow_leaves(t), f.next_cont)
    return [Assignment(dict(zip(gamma, combo))) for combo in product(*per_var)]


def _arrow_leaves(t: Type) -> int:
    if isinstance(t, Prod):
        return _arrow_leaves(t.left) + _arrow_leaves(t.right)
    return 1 if isinstance(t, Arrow) else 0
