"""Concrete syntax for terms. Source terms print in a form the parser reads
back to the same tree; run-time forms get a readable but unparseable shape."""

from __future__ import annotations

from .syntax import (
    App, Assign, BinOp, BoolLit, Callcc, ContV, Deref, Fix, FName, Hole, If,
    IntLit, Lam, Loc, NewRef, Pair, Proj, Term, Throw, UnitV, Var,
)
from .types import show_type

EXPR, SEQ, ASSIGN, CMP, ADD, MUL, PREFIX, APP, BANG, ATOM = range(10)


def show_loc(loc: Loc) -> str:
    return f"l{loc.region}{loc.idx}"


def show_term(m: Term) -> str:
    return _show(m, EXPR)


def _wrap(s: str, own: int, ctx: int) -> str:
    return f"({s})" if own < ctx else s


def _is_let(m: Term) -> bool:
    return isinstance(m, App) and isinstance(m.fn, Lam) and m.fn.ty is None


def _show(m: Term, ctx: int) -> str:
    match m:
        case UnitV():
            return "()"
        case BoolLit(b):
            return "tt" if b else "ff"
        case IntLit(n):
            return str(n) if n >= 0 else f"({n})"
        case Var(x):
            return x
        case Loc():
            return show_loc(m)
        case FName(n):
            return n.short()
        case Hole():
            return "[]"
        case ContV(t, k, c):
            inner = show_term(k) if c is None else f"{show_term(k)}, {c.short()}"
            return f"cont[{show_type(t)}]({inner})"
        case Pair(a, b):
            return f"<{_show(a, EXPR)}, {_show(b, EXPR)}>"
        case Callcc(x, t, b):
            return f"callcc({x}:{show_type(t)}. {_show(b, EXPR)})"
        case App(Lam(x, None, body), bound):
            if x == "_":
                s = f"{_show(bound, ASSIGN)}; {_show(body, EXPR)}"
                return _wrap(s, SEQ, ctx)
            s = f"let {x} = {_show(bound, EXPR)} in {_show(body, EXPR)}"
            return _wrap(s, EXPR, ctx)
        case Lam(x, t, b):
            ann = "?" if t is None else show_type(t)
            return _wrap(f"fun({x}:{ann}) {_show(b, EXPR)}", EXPR, ctx)
        case Fix(f, x, t, r, b):
            if r is None:
                s = f"fix {f}({x}:{show_type(t)}) {_show(b, EXPR)}"
            else:
                s = f"fix {f}({x}:{show_type(t)}):{show_type(r)} ({_show(b, EXPR)})"
            return _wrap(s, EXPR, ctx)
        case If(BinOp("=", x, y), BoolLit(False), BoolLit(True)):
            return _wrap(f"{_show(x, ADD)} <> {_show(y, ADD)}", CMP, ctx)
        case If(c, BoolLit(False), BoolLit(True)):
            return _wrap(f"not {_show(c, PREFIX)}", PREFIX, ctx)
        case If(c, a, b):
            s = f"if {_show(c, EXPR)} then {_show(a, EXPR)} else {_show(b, EXPR)}"
            return _wrap(s, EXPR, ctx)
        case Throw(a, b):
            return _wrap(f"throw {_show(a, EXPR)} to {_show(b, EXPR)}", EXPR, ctx)
        case Assign(a, b):
            return _wrap(f"{_show(a, CMP)} := {_show(b, CMP)}", ASSIGN, ctx)
        case BinOp(op, a, b) if op in ("=", "<"):
            return _wrap(f"{_show(a, ADD)} {op} {_show(b, ADD)}", CMP, ctx)
        case BinOp(op, a, b) if op in ("+", "-"):
            return _wrap(f"{_show(a, ADD)} {op} {_show(b, MUL)}", ADD, ctx)
        case BinOp("*", a, b):
            return _wrap(f"{_show(a, MUL)} * {_show(b, PREFIX)}", MUL, ctx)
        case Proj(i, a):
            kw = "fst" if i == 1 else "snd"
            return _wrap(f"{kw} {_show(a, PREFIX)}", PREFIX, ctx)
        case NewRef(a):
            return _wrap(f"ref {_show(a, PREFIX)}", PREFIX, ctx)
        case App(f, a):
            arg = f"({_show(a, EXPR)})" if isinstance(a, Pair) else _show(a, BANG)
            return _wrap(f"{_show(f, APP)} {arg}", APP, ctx)
        case Deref(a):
            return _wrap(f"!{_show(a, BANG)}", BANG, ctx)
    raise TypeError(f"cannot print {m!r}")
