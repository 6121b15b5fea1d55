"""Typed function and continuation names, and deterministic fresh allocation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .types import UNIT, Arrow, Type, show_type_atom

FUN = "f"
CONT = "c"

ERR_TYPE = Arrow(UNIT, UNIT)


@dataclass(frozen=True, slots=True)
class Name:
    """A function name (typed by its arrow type) or a continuation name
    (typed by the type of values it accepts).

    `tag` is empty for ordinary names and "errn" / "final" for the reserved
    ones, which are never handed out by an allocator.
    """

    kind: str
    type: Type
    idx: int = 0
    tag: str = ""

    @property
    def is_fun(self) -> bool:
        return self.kind == FUN

    @property
    def is_cont(self) -> bool:
        return self.kind == CONT

    @property
    def reserved(self) -> bool:
        return bool(self.tag)

    @property
    def is_final(self) -> bool:
        return self.tag == "final"

    @property
    def is_err(self) -> bool:
        return self.tag == "errn"

    def short(self) -> str:
        if self.tag == "errn":
            return "errn"
        if self.tag == "final":
            return "final"
        return f"{self.kind}{self.idx}"

    def __str__(self) -> str:
        if self.tag == "errn":
            return "errn"
        return f"{self.short()}@{show_type_atom(self.type)}"

    def sort_key(self):
        return (self.kind, self.tag, self.idx, str(self.type))


ERRN = Name(FUN, ERR_TYPE, 0, "errn")


def final_name(t: Type) -> Name:
    """The top-level continuation ◦ at answer type t."""
    return Name(CONT, t, 0, "final")


def fun_name(t: Arrow, idx: int) -> Name:
    return Name(FUN, t, idx)


def cont_name(t: Type, idx: int) -> Name:
    return Name(CONT, t, idx)


@dataclass(frozen=True, slots=True)
class Fresh:
    """Allocator state: next index per kind. Immutable; methods return the
    allocated name together with the advanced allocator."""

    next_fun: int = 0
    next_cont: int = 0

    @staticmethod
    def after(names: Iterable[Name]) -> "Fresh":
        nf = nc = 0
        for n in names:
            if n.reserved:
                continue
            if n.is_fun:
                nf = max(nf, n.idx + 1)
            else:
                nc = max(nc, n.idx + 1)
        return Fresh(nf, nc)

    def fun(self, t: Arrow) -> tuple[Name, "Fresh"]:
        return Name(FUN, t, self.next_fun), Fresh(self.next_fun + 1, self.next_cont)

    def cont(self, t: Type) -> tuple[Name, "Fresh"]:
        return Name(CONT, t, self.next_cont), Fresh(self.next_fun, self.next_cont + 1)
