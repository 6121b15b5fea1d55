"""Recursive-descent parser for types, terms and evaluation contexts.

Source files may declare free variables with pragma comments of the form
``#@ f : Unit -> Unit``; all other ``#`` comments are ignored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .syntax import (
    FF, HOLE, TT, UNIT_V, App, Assign, BinOp, Callcc, Deref, Fix, If, IntLit,
    Lam, NewRef, Pair, Proj, Term, Throw, Var, has_hole, is_eval_context, let, seq,
)
from .types import BOOL, INT, UNIT, Arrow, ContT, Prod, RefT, Type


class ParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line, self.col = line, col


KEYWORDS = {
    "fun", "fix", "let", "in", "if", "then", "else", "ref", "fst", "snd",
    "callcc", "throw", "to", "tt", "ff", "not", "Unit", "Int", "Bool", "cont",
}

_TOKEN = re.compile(
    r"""(?P<ws>\s+|\#[^\n]*)
      | (?P<int>\d+)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
      | (?P<sym>:=|<>|->|\[\]|[()<>,:.;=+\-*!])""",
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # int | ident | kw | sym | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        s = m.group()
        if kind != "ws":
            if kind == "ident" and s in KEYWORDS:
                kind = "kw"
            toks.append(Token(kind, s, line, pos - line_start + 1))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = pos + s.rindex("\n") + 1
        pos = m.end()
    toks.append(Token("eof", "", line, pos - line_start + 1))
    return toks


_ARG_START = {"int", "ident"}
_ARG_START_TEXT = {"(", "!", "tt", "ff", "callcc", "[]"}


class _Parser:
    def __init__(self, text: str, allow_hole: bool = False):
        self.toks = tokenize(text)
        self.i = 0
        self.allow_hole = allow_hole

    # -- helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str):
        t = self.tok
        raise ParseError(f"{msg} (found {t.text or 'end of input'!r})", t.line, t.col)

    def at(self, *texts: str) -> bool:
        return self.tok.kind in ("kw", "sym") and self.tok.text in texts

    def eat(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        t = self.tok
        self.i += 1
        return t

    def ident(self) -> str:
        if self.tok.kind != "ident":
            self.error("expected identifier")
        s = self.tok.text
        self.i += 1
        return s

    def done(self):
        if self.tok.kind != "eof":
            self.error("unexpected trailing input")

    # -- types
    def type_(self) -> Type:
        left = self.prod_type()
        if self.at("->"):
            self.i += 1
            return Arrow(left, self.type_())
        return left

    def prod_type(self) -> Type:
        t = self.prefix_type()
        while self.at("*"):
            self.i += 1
            t = Prod(t, self.prefix_type())
        return t

    def prefix_type(self) -> Type:
        if self.at("ref"):
            self.i += 1
            return RefT(self.prefix_type())
        if self.at("cont"):
            self.i += 1
            return ContT(self.prefix_type())
        if self.at("Unit"):
            self.i += 1
            return UNIT
        if self.at("Int"):
            self.i += 1
            return INT
        if self.at("Bool"):
            self.i += 1
            return BOOL
        if self.at("("):
            self.i += 1
            t = self.type_()
            self.eat(")")
            return t
        self.error("expected a type")

    # -- terms
    def expr(self) -> Term:
        if self.at("fun"):
            self.i += 1
            self.eat("(")
            x = self.ident()
            self.eat(":")
            t = self.type_()
            self.eat(")")
            return Lam(x, t, self.expr())
        if self.at("fix"):
            self.i += 1
            f = self.ident()
            self.eat("(")
            x = self.ident()
            self.eat(":")
            t = self.type_()
            self.eat(")")
            ret = None
            if self.at(":"):
                self.i += 1
                ret = self.type_()
            return Fix(f, x, t, ret, self.expr())
        if self.at("let"):
            self.i += 1
            x = self.ident()
            self.eat("=")
            bound = self.expr()
            self.eat("in")
            return let(x, bound, self.expr())
        if self.at("if"):
            self.i += 1
            c = self.expr()
            self.eat("then")
            a = self.expr()
            self.eat("else")
            return If(c, a, self.expr())
        if self.at("throw"):
            self.i += 1
            a = self.expr()
            self.eat("to")
            return Throw(a, self.expr())
        return self.seq()

    def seq(self) -> Term:
        first = self.assign()
        if self.at(";"):
            self.i += 1
            return seq(first, self.expr())
        return first

    def assign(self) -> Term:
        target = self.compare()
        if self.at(":="):
            self.i += 1
            return Assign(target, self.compare())
        return target

    def compare(self) -> Term:
        left = self.additive()
        if self.at("=", "<"):
            op = self.tok.text
            self.i += 1
            return BinOp(op, left, self.additive())
        if self.at("<>"):
            self.i += 1
            return If(BinOp("=", left, self.additive()), FF, TT)
        return left

    def additive(self) -> Term:
        left = self.multiplicative()
        while self.at("+", "-"):
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.multiplicative())
        return left

    def multiplicative(self) -> Term:
        left = self.prefix()
        while self.at("*"):
            self.i += 1
            left = BinOp("*", left, self.prefix())
        return left

    def prefix(self) -> Term:
        if self.at("ref"):
            self.i += 1
            return NewRef(self.prefix())
        if self.at("fst", "snd"):
            idx = 1 if self.tok.text == "fst" else 2
            self.i += 1
            return Proj(idx, self.prefix())
        if self.at("not"):
            self.i += 1
            return If(self.prefix(), FF, TT)
        if self.at("-"):
            self.i += 1
            operand = self.prefix()
            if isinstance(operand, IntLit) and operand.value >= 0:
                return IntLit(-operand.value)
            return BinOp("-", IntLit(0), operand)
        return self.application()

    def _arg_start(self) -> bool:
        t = self.tok
        if t.kind in _ARG_START:
            return True
        return t.kind in ("kw", "sym") and t.text in _ARG_START_TEXT

    def application(self) -> Term:
        fn = self.bang(head=True)
        while self._arg_start():
            fn = App(fn, self.bang(head=False))
        return fn

    def bang(self, head: bool) -> Term:
        if self.at("!"):
            self.i += 1
            return Deref(self.bang(head=False))
        return self.atom(head)

    def atom(self, head: bool) -> Term:
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return IntLit(int(t.text))
        if t.kind == "ident":
            self.i += 1
            return Var(t.text)
        if self.at("tt"):
            self.i += 1
            return TT
        if self.at("ff"):
            self.i += 1
            return FF
        if self.at("[]"):
            if not self.allow_hole:
                self.error("a hole is only allowed in an evaluation context")
            self.i += 1
            return HOLE
        if self.at("("):
            self.i += 1
            if self.at(")"):
                self.i += 1
                return UNIT_V
            m = self.expr()
            self.eat(")")
            return m
        if head and self.at("<"):
            self.i += 1
            a = self.expr()
            self.eat(",")
            b = self.expr()
            self.eat(">")
            return Pair(a, b)
        if self.at("callcc"):
            self.i += 1
            self.eat("(")
            x = self.ident()
            self.eat(":")
            ty = self.type_()
            self.eat(".")
            body = self.expr()
            self.eat(")")
            return Callcc(x, ty, body)
        self.error("expected a term")


def parse_type(text: str) -> Type:
    p = _Parser(text)
    t = p.type_()
    p.done()
    return t


def parse_term(text: str) -> Term:
    p = _Parser(text)
    m = p.expr()
    p.done()
    return m


def parse_context(text: str) -> Term:
    """Parse a term with exactly one hole `[]` (anywhere). Whether the hole
    sits in an evaluation position is checked by the caller when needed."""
    p = _Parser(text, allow_hole=True)
    m = p.expr()
    p.done()
    if not has_hole(m):
        raise ParseError("context has no hole", 1, 1)
    return m


def parse_eval_context(text: str) -> Term:
    k = parse_context(text)
    if not is_eval_context(k):
        raise ParseError("hole is not in an evaluation position", 1, 1)
    return k


_PRAGMA = re.compile(r"^\s*#@\s*([A-Za-z_][A-Za-z0-9_']*)\s*:(.*)$")


def parse_declarations(text: str) -> dict[str, Type]:
    env = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        m = _PRAGMA.match(line)
        if m:
            try:
                env[m.group(1)] = parse_type(m.group(2))
            except ParseError as e:
                raise ParseError(f"in declaration: {e}", lineno, 1) from None
    return env


def parse_program(text: str) -> tuple[dict[str, Type], Term]:
    """A term file: declarations of free variables plus one term."""
    return parse_declarations(text), parse_term(text)
