"""Syntax-directed type inference (Church-style; every binder annotated)."""

from __future__ import annotations

from dataclasses import dataclass, field

from .syntax import (
    App, Assign, BinOp, BoolLit, Callcc, ContV, Deref, Fix, FName, Hole, If,
    IntLit, Lam, Loc, NewRef, Pair, Proj, Term, Throw, UnitV, Var, plug, walk,
)
from .types import (
    BOOL, BOT, INT, UNIT, Arrow, BotT, ContT, Model, Prod, RefT, Type,
    classify_type_fragment, is_boundary_type, is_subtype, join,
)


class TypeCheckError(TypeError):
    def __init__(self, msg: str, term: Term | None = None, rule: str = ""):
        where = f" in `{term}`" if term is not None else ""
        tag = f"[{rule}] " if rule else ""
        super().__init__(f"{tag}{msg}{where}")
        self.term, self.rule = term, rule


@dataclass(frozen=True)
class TypingEnv:
    locs: dict[Loc, Type] = field(default_factory=dict)
    vars: dict[str, Type] = field(default_factory=dict)

    def bind(self, x: str, t: Type) -> "TypingEnv":
        return TypingEnv(self.locs, {**self.vars, x: t})


_HOLE_VAR = "[hole]"


def infer_type(env: TypingEnv, m: Term, seen: set[Type] | None = None) -> Type:
    """The type of m under env. When `seen` is given, every type occurring
    in the derivation (annotations and judgments) is added to it."""
    t = _infer(env, m, seen)
    if seen is not None:
        seen.add(t)
    return t


def _sub(env, m, seen):
    return infer_type(env, m, seen)


def _need(cond: bool, msg: str, m: Term, rule: str):
    if not cond:
        raise TypeCheckError(msg, m, rule)


def _infer(env: TypingEnv, m: Term, seen) -> Type:
    match m:
        case UnitV():
            return UNIT
        case BoolLit():
            return BOOL
        case IntLit():
            return INT
        case Var(x):
            _need(x in env.vars, f"unbound variable {x}", m, "var")
            return env.vars[x]
        case Loc():
            _need(m in env.locs, "location outside the heap typing", m, "loc")
            return RefT(env.locs[m])
        case Hole():
            raise TypeCheckError("hole outside a context", m, "hole")
        case FName(n):
            return n.type
        case Pair(a, b):
            return Prod(_sub(env, a, seen), _sub(env, b, seen))
        case Proj(i, a):
            ta = _sub(env, a, seen)
            if isinstance(ta, BotT):
                return BOT
            _need(isinstance(ta, Prod), f"projection of non-pair type {ta}", m, "proj")
            return ta.left if i == 1 else ta.right
        case Lam(x, t, b):
            _need(t is not None, "unannotated binder outside a let", m, "lam")
            if seen is not None:
                seen.add(t)
            return Arrow(t, _sub(env.bind(x, t), b, seen))
        case Fix(f, x, t, r, b):
            if seen is not None:
                seen.add(t)
            if r is None:
                r = _sub(env.bind(f, Arrow(t, BOT)).bind(x, t), b, None)
            tb = _sub(env.bind(f, Arrow(t, r)).bind(x, t), b, seen)
            _need(is_subtype(tb, r), f"body has type {tb}, expected {r}", m, "fix")
            return Arrow(t, r)
        case App(Lam(x, None, b), a):
            ta = _sub(env, a, seen)
            return _sub(env.bind(x, ta), b, seen)
        case App(f, a):
            tf = _sub(env, f, seen)
            ta = _sub(env, a, seen)
            if isinstance(tf, BotT):
                return BOT
            _need(isinstance(tf, Arrow), f"applying a non-function of type {tf}", m, "app")
            _need(is_subtype(ta, tf.arg), f"argument has type {ta}, expected {tf.arg}", m, "app")
            return tf.res
        case NewRef(a):
            return RefT(_sub(env, a, seen))
        case Deref(a):
            ta = _sub(env, a, seen)
            if isinstance(ta, BotT):
                return BOT
            _need(isinstance(ta, RefT), f"dereferencing non-reference type {ta}", m, "deref")
            return ta.content
        case Assign(a, b):
            ta = _sub(env, a, seen)
            tb = _sub(env, b, seen)
            if not isinstance(ta, BotT):
                _need(isinstance(ta, RefT), f"assigning to non-reference type {ta}", m, "assign")
                _need(is_subtype(tb, ta.content), f"storing {tb} into {ta}", m, "assign")
            return UNIT
        case If(c, a, b):
            tc = _sub(env, c, seen)
            _need(is_subtype(tc, BOOL), f"condition has type {tc}", m, "if")
            ta, tb = _sub(env, a, seen), _sub(env, b, seen)
            t = join(ta, tb)
            _need(t is not None, f"branches disagree: {ta} vs {tb}", m, "if")
            return t
        case BinOp(op, a, b):
            ta, tb = _sub(env, a, seen), _sub(env, b, seen)
            if op in ("+", "-", "*"):
                _need(is_subtype(ta, INT) and is_subtype(tb, INT), "arithmetic on non-integers", m, "arith")
                return INT
            if is_subtype(ta, INT) and is_subtype(tb, INT):
                return BOOL
            _need(op == "=", "comparison on non-integers", m, "compare")
            refs = isinstance(ta, (RefT, BotT)) and isinstance(tb, (RefT, BotT))
            _need(refs and join(ta, tb) is not None, f"cannot compare {ta} with {tb}", m, "refeq")
            return BOOL
        case Callcc(x, t, b):
            if seen is not None:
                seen.add(ContT(t))
            tb = _sub(env.bind(x, ContT(t)), b, seen)
            _need(is_subtype(tb, t), f"body has type {tb}, expected {t}", m, "callcc")
            return t
        case Throw(a, k):
            ta, tk = _sub(env, a, seen), _sub(env, k, seen)
            if isinstance(tk, BotT):
                return BOT
            _need(isinstance(tk, ContT), f"throwing to non-continuation type {tk}", m, "throw")
            _need(is_subtype(ta, tk.answer), f"throwing {ta} to {tk}", m, "throw")
            return BOT
        case ContV(t, k, c):
            r = infer_context_type(env, k, t, seen)
            if c is not None:
                _need(is_subtype(r, c.type), f"context yields {r} but {c} expects {c.type}", m, "cont")
            return ContT(t)
    raise TypeCheckError(f"unknown term node {type(m).__name__}", m, "?")


def infer_context_type(env: TypingEnv, k: Term, hole_type: Type, seen: set[Type] | None = None) -> Type:
    return infer_type(env.bind(_HOLE_VAR, hole_type), plug(k, Var(_HOLE_VAR)), seen)


def check_cr_free(env: TypingEnv, m: Term, boundary: Type) -> bool:
    for s in walk(m):
        if isinstance(s, (Loc, ContV, FName, Hole)):
            return False
    if env.locs or not all(is_boundary_type(t) for t in env.vars.values()):
        return False
    if not is_boundary_type(boundary):
        return False
    try:
        return is_subtype(infer_type(env, m), boundary)
    except TypeCheckError:
        return False


def fragment_of(types) -> set[Model]:
    """Models whose syntax covers every type in the collection."""
    tags = set(Model)
    for t in types:
        tags &= classify_type_fragment(t)
    return tags
