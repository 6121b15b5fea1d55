"""Abstract syntax of terms, including the run-time forms (locations,
function names, staged continuations) and evaluation contexts."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, fields
from typing import Callable, Iterator

from .names import Name
from .types import Type


class Term:
    __slots__ = ()

    def __str__(self) -> str:
        from .printer import show_term

        return show_term(self)


@dataclass(frozen=True, slots=True)
class UnitV(Term):
    pass


@dataclass(frozen=True, slots=True)
class BoolLit(Term):
    value: bool


@dataclass(frozen=True, slots=True)
class IntLit(Term):
    value: int


@dataclass(frozen=True, slots=True)
class Var(Term):
    name: str


@dataclass(frozen=True, slots=True, order=True)
class Loc(Term):
    idx: int
    region: str = ""


@dataclass(frozen=True, slots=True)
class Pair(Term):
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Proj(Term):
    index: int  # 1 or 2
    arg: Term


@dataclass(frozen=True, slots=True)
class Lam(Term):
    """λx:ty.body. `ty` is None only for the binder introduced by `let`
    and `;`, which is always in function position of an application."""

    var: str
    ty: Type | None
    body: Term


@dataclass(frozen=True, slots=True)
class Fix(Term):
    """fix fvar(var:ty):ret. body; `ret` may be omitted in the source."""

    fvar: str
    var: str
    ty: Type
    ret: Type | None
    body: Term


@dataclass(frozen=True, slots=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True, slots=True)
class NewRef(Term):
    arg: Term


@dataclass(frozen=True, slots=True)
class Deref(Term):
    arg: Term


@dataclass(frozen=True, slots=True)
class Assign(Term):
    target: Term
    value: Term


@dataclass(frozen=True, slots=True)
class If(Term):
    cond: Term
    then: Term
    orelse: Term


@dataclass(frozen=True, slots=True)
class BinOp(Term):
    op: str  # one of + - * = <
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Callcc(Term):
    var: str
    ty: Type
    body: Term


@dataclass(frozen=True, slots=True)
class Throw(Term):
    arg: Term
    target: Term


@dataclass(frozen=True, slots=True)
class FName(Term):
    name: Name


@dataclass(frozen=True, slots=True)
class ContV(Term):
    """cont_ty(ctx, cname); cname is None for the plain-semantics cont_ty(ctx)."""

    ty: Type
    ctx: Term
    cname: Name | None = None


@dataclass(frozen=True, slots=True)
class Hole(Term):
    pass


UNIT_V = UnitV()
TT = BoolLit(True)
FF = BoolLit(False)
HOLE = Hole()

ARITH = ("+", "-", "*")
COMPARE = ("=", "<")


def seq(first: Term, second: Term) -> Term:
    """first; second"""
    return App(Lam("_", None, second), first)


def let(var: str, bound: Term, body: Term) -> Term:
    return App(Lam(var, None, body), bound)


def omega(body_var: str = "w") -> Term:
    """Ω: (fix w(z:Unit). w z) ()"""
    from .types import UNIT

    return App(Fix(body_var, "z", UNIT, None, App(Var(body_var), Var("z"))), UNIT_V)


def is_value(m: Term) -> bool:
    match m:
        case Pair(a, b):
            return is_value(a) and is_value(b)
        case UnitV() | BoolLit() | IntLit() | Var() | Loc() | Lam() | Fix() | FName() | ContV():
            return True
    return False


def children(m: Term) -> Iterator[Term]:
    for f in fields(m):
        v = getattr(m, f.name)
        if isinstance(v, Term):
            yield v


def rebuild(m: Term, fn: Callable[[Term], Term]) -> Term:
    """Apply fn to every immediate subterm of m."""
    kw = {}
    changed = False
    for f in fields(m):
        v = getattr(m, f.name)
        if isinstance(v, Term):
            nv = fn(v)
            changed = changed or nv is not v
            kw[f.name] = nv
        else:
            kw[f.name] = v
    return type(m)(**kw) if changed else m


def transform(m: Term, fn: Callable[[Term], Term | None]) -> Term:
    """Top-down rewrite: fn may return a replacement (not revisited) or None."""
    r = fn(m)
    if r is not None:
        return r
    return rebuild(m, lambda s: transform(s, fn))


def walk(m: Term) -> Iterator[Term]:
    yield m
    for s in children(m):
        yield from walk(s)


def names_of(m: Term) -> set[Name]:
    out = set()
    for s in walk(m):
        if isinstance(s, FName):
            out.add(s.name)
        elif isinstance(s, ContV) and s.cname is not None:
            out.add(s.cname)
    return out


def locs_of(m: Term) -> set[Loc]:
    return {s for s in walk(m) if isinstance(s, Loc)}


def has_hole(m: Term) -> bool:
    return any(isinstance(s, Hole) for s in walk(m))


def free_vars(m: Term) -> set[str]:
    match m:
        case Var(x):
            return {x}
        case Lam(x, _, b) | Callcc(x, _, b):
            return free_vars(b) - {x}
        case Fix(f, x, _, _, b):
            return free_vars(b) - {f, x}
        case UnitV() | BoolLit() | IntLit() | Loc() | FName() | Hole():
            return set()
    out = set()
    for s in children(m):
        out |= free_vars(s)
    return out


_rename_counter = itertools.count()


def _fresh_var(base: str, avoid: set[str]) -> str:
    while True:
        cand = f"{base.rstrip(chr(39))}'{next(_rename_counter)}"
        if cand not in avoid:
            return cand


def subst(m: Term, env: dict[str, Term]) -> Term:
    """Capture-avoiding simultaneous substitution of terms for variables."""
    if not env:
        return m
    danger: set[str] = set()
    for v in env.values():
        danger |= free_vars(v)
    return _subst(m, env, danger)


def _binder(x: str, body: Term, env: dict[str, Term], danger: set[str]):
    if x in env:
        env = {k: v for k, v in env.items() if k != x}
    if x in danger and x != "_":
        nx = _fresh_var(x, danger | free_vars(body))
        body = _subst(body, {x: Var(nx)}, {nx})
        x = nx
    return x, body, env


def _subst(m: Term, env: dict[str, Term], danger: set[str]) -> Term:
    match m:
        case Var(x):
            return env.get(x, m)
        case UnitV() | BoolLit() | IntLit() | Loc() | FName() | Hole():
            return m
        case Lam(x, t, b):
            x, b, env2 = _binder(x, b, env, danger)
            return Lam(x, t, _subst(b, env2, danger) if env2 else b)
        case Callcc(x, t, b):
            x, b, env2 = _binder(x, b, env, danger)
            return Callcc(x, t, _subst(b, env2, danger) if env2 else b)
        case Fix(f, x, t, r, b):
            f, b, env2 = _binder(f, b, env, danger)
            x, b, env2 = _binder(x, b, env2, danger)
            return Fix(f, x, t, r, _subst(b, env2, danger) if env2 else b)
        case App(a, b):
            return App(_subst(a, env, danger), _subst(b, env, danger))
        case Pair(a, b):
            return Pair(_subst(a, env, danger), _subst(b, env, danger))
        case Proj(i, a):
            return Proj(i, _subst(a, env, danger))
        case NewRef(a):
            return NewRef(_subst(a, env, danger))
        case Deref(a):
            return Deref(_subst(a, env, danger))
        case Assign(a, b):
            return Assign(_subst(a, env, danger), _subst(b, env, danger))
        case If(a, b, c):
            return If(_subst(a, env, danger), _subst(b, env, danger), _subst(c, env, danger))
        case BinOp(op, a, b):
            return BinOp(op, _subst(a, env, danger), _subst(b, env, danger))
        case Throw(a, b):
            return Throw(_subst(a, env, danger), _subst(b, env, danger))
        case ContV(t, k, c):
            return ContV(t, _subst(k, env, danger), c)
    raise TypeError(f"not a term: {m!r}")


def plug(k: Term, m: Term) -> Term:
    """K[m] for an evaluation context K."""
    match k:
        case Hole():
            return m
        case Pair(a, b):
            return Pair(a, plug(b, m)) if is_value(a) else Pair(plug(a, m), b)
        case App(a, b):
            return App(a, plug(b, m)) if is_value(a) else App(plug(a, m), b)
        case Assign(a, b):
            return Assign(a, plug(b, m)) if is_value(a) else Assign(plug(a, m), b)
        case BinOp(op, a, b):
            return BinOp(op, a, plug(b, m)) if is_value(a) else BinOp(op, plug(a, m), b)
        case Throw(a, b):
            return Throw(a, plug(b, m)) if is_value(a) else Throw(plug(a, m), b)
        case Proj(i, a):
            return Proj(i, plug(a, m))
        case NewRef(a):
            return NewRef(plug(a, m))
        case Deref(a):
            return Deref(plug(a, m))
        case If(a, b, c):
            return If(plug(a, m), b, c)
    raise ValueError(f"not an evaluation context: {k}")


def fill_hole(c: Term, m: Term) -> Term:
    """C[m] for an arbitrary one-hole context (no evaluation-position check)."""
    return transform(c, lambda s: m if isinstance(s, Hole) else None)


def is_eval_context(k: Term) -> bool:
    """Exactly one hole, sitting in an evaluation position (K-grammar)."""
    match k:
        case Hole():
            return True
        case Pair(a, b) | App(a, b) | Assign(a, b) | BinOp(_, a, b) | Throw(a, b):
            if is_value(a):
                return not has_hole(a) and is_eval_context(b)
            return is_eval_context(a) and not has_hole(b)
        case Proj(_, a) | NewRef(a) | Deref(a):
            return is_eval_context(a)
        case If(a, b, c):
            return is_eval_context(a) and not has_hole(b) and not has_hole(c)
    return False


def compose_ctx(outer: Term, inner: Term) -> Term:
    """outer[inner] for two evaluation contexts."""
    return plug(outer, inner)


def replace_names(m: Term, funs: Callable[[Name], Term | None]) -> Term:
    """Replace function-name constants according to funs (None keeps)."""

    def visit(s: Term) -> Term | None:
        if isinstance(s, FName):
            r = funs(s.name)
            return s if r is None else r
        return None

    return transform(m, visit)
