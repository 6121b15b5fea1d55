"""Types of the language and the fragment lattice they induce."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Model(str, Enum):
    HOSC = "hosc"
    GOSC = "gosc"
    HOS = "hos"
    GOS = "gos"

    @property
    def visible(self) -> bool:
        """Contexts restricted to ground store: O must stay inside its view."""
        return self in (Model.GOSC, Model.GOS)

    @property
    def bracketed(self) -> bool:
        """Contexts without control: O must answer the top question first."""
        return self in (Model.HOS, Model.GOS)

    def __str__(self) -> str:
        return self.name


class Type:
    __slots__ = ()

    def __str__(self) -> str:
        return show_type(self)


@dataclass(frozen=True, slots=True)
class UnitT(Type):
    pass


@dataclass(frozen=True, slots=True)
class IntT(Type):
    pass


@dataclass(frozen=True, slots=True)
class BoolT(Type):
    pass


@dataclass(frozen=True, slots=True)
class BotT(Type):
    """Type of terms that never return (throw, divergence).

    Not part of the surface grammar; it sits below every type so that
    `throw` and Ω can be used where any type is expected.
    """


@dataclass(frozen=True, slots=True)
class RefT(Type):
    content: Type


@dataclass(frozen=True, slots=True)
class ContT(Type):
    answer: Type


@dataclass(frozen=True, slots=True)
class Prod(Type):
    left: Type
    right: Type


@dataclass(frozen=True, slots=True)
class Arrow(Type):
    arg: Type
    res: Type


UNIT = UnitT()
INT = IntT()
BOOL = BoolT()
BOT = BotT()


def show_type(t: Type, compact: bool = False) -> str:
    arrow = "->" if compact else " -> "
    star = "*" if compact else " * "

    def go(t: Type, prec: int) -> str:
        match t:
            case UnitT():
                return "Unit"
            case IntT():
                return "Int"
            case BoolT():
                return "Bool"
            case BotT():
                return "Bot"
            case RefT(inner):
                s = "ref " + go(inner, 3)
                return f"({s})" if prec > 2 else s
            case ContT(inner):
                s = "cont " + go(inner, 3)
                return f"({s})" if prec > 2 else s
            case Prod(a, b):
                s = go(a, 2) + star + go(b, 2)
                return f"({s})" if prec > 1 else s
            case Arrow(a, b):
                s = go(a, 1) + arrow + go(b, 0)
                return f"({s})" if prec > 0 else s
        raise TypeError(f"not a type: {t!r}")

    return go(t, 0)


def show_type_atom(t: Type) -> str:
    """Compact rendering that is a single token (parenthesized unless atomic)."""
    s = show_type(t, compact=True)
    if isinstance(t, (UnitT, IntT, BoolT)):
        return s
    return f"({s})"


def is_ground(t: Type) -> bool:
    match t:
        case UnitT() | IntT() | BoolT():
            return True
        case RefT(inner):
            return is_ground(inner)
    return False


def subterms(t: Type):
    yield t
    match t:
        case RefT(a) | ContT(a):
            yield from subterms(a)
        case Prod(a, b) | Arrow(a, b):
            yield from subterms(a)
            yield from subterms(b)


def classify_type_fragment(t: Type) -> set[Model]:
    tags = {Model.HOSC}
    parts = list(subterms(t))
    ground_store = all(is_ground(p.content) for p in parts if isinstance(p, RefT))
    cont_free = not any(isinstance(p, ContT) for p in parts)
    if ground_store:
        tags.add(Model.GOSC)
    if cont_free:
        tags.add(Model.HOS)
    if ground_store and cont_free:
        tags.add(Model.GOS)
    return tags


def is_boundary_type(t: Type) -> bool:
    """Cont- and Ref-free, the types allowed at the term/context boundary."""
    return not any(isinstance(p, (RefT, ContT)) for p in subterms(t))


def is_subtype(a: Type, b: Type) -> bool:
    if a == b or isinstance(a, BotT):
        return True
    match a, b:
        case Prod(a1, a2), Prod(b1, b2):
            return is_subtype(a1, b1) and is_subtype(a2, b2)
        case Arrow(a1, a2), Arrow(b1, b2):
            return is_subtype(b1, a1) and is_subtype(a2, b2)
    return False


def join(a: Type, b: Type) -> Type | None:
    if is_subtype(a, b):
        return b
    if is_subtype(b, a):
        return a
    match a, b:
        case Prod(a1, a2), Prod(b1, b2):
            l, r = join(a1, b1), join(a2, b2)
            if l is not None and r is not None:
                return Prod(l, r)
        case Arrow(a1, a2), Arrow(b1, b2) if a1 == b1:
            r = join(a2, b2)
            if r is not None:
                return Arrow(a1, r)
    return None


def settle(t: Type, default: Type = UNIT) -> Type:
    """Replace the internal bottom type by `default` (for boundary use)."""
    match t:
        case BotT():
            return default
        case RefT(a):
            return RefT(settle(a, default))
        case ContT(a):
            return ContT(settle(a, default))
        case Prod(a, b):
            return Prod(settle(a, default), settle(b, default))
        case Arrow(a, b):
            return Arrow(settle(a, default), settle(b, default))
    return t
