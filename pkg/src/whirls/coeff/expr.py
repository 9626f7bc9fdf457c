"""Coefficient expression language.

Grammar (EBNF, see docs/dsl.md):

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = ("-" | "+") unary | power ;
    power   = primary [ "^" unary ] ;
    primary = number | ident | ident "(" expr { "," expr } ")" | "(" expr ")" ;

``^`` binds tighter than unary minus and is right associative, so
``-2^2`` is -4 and ``2^3^2`` is 512.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

from . import dual

VARIABLES = ("r", "s", "xi")
CONSTANTS = {"pi": math.pi}
FUNCTIONS = {"exp": 1, "log": 1, "sqrt": 1, "sin": 1, "cos": 1, "pow": 2}


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset
        self.reason = message


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple


Node = Union[Num, Var, Unary, Binary, Call]


# ---------------------------------------------------------------------------
# tokenizer

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(src: str) -> list[Token]:
    out = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", pos)
        if m.lastgroup != "ws":
            out.append(Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    out.append(Token("end", "", len(src)))
    return out


# ---------------------------------------------------------------------------
# parser

class _Parser:
    def __init__(self, src: str, names: frozenset):
        self.toks = tokenize(src)
        self.i = 0
        self.names = names

    def peek(self) -> Token:
        return self.toks[self.i]

    def take(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.text != text:
            found = repr(t.text) if t.kind != "end" else "end of input"
            raise ExprSyntaxError(f"expected {text!r}, found {found}", t.pos)
        return self.take()

    def parse(self) -> Node:
        if self.peek().kind == "end":
            raise ExprSyntaxError("empty expression", 0)
        node = self.expr()
        t = self.peek()
        if t.kind != "end":
            raise ExprSyntaxError(f"unexpected {t.text!r}", t.pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take().text
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.take().text
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek().text in ("-", "+"):
            op = self.take().text
            return Unary(op, self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        if self.peek().text == "^":
            self.take()
            return Binary("^", base, self.unary())
        return base

    def primary(self) -> Node:
        t = self.take()
        if t.kind == "num":
            return Num(float(t.text))
        if t.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if t.kind == "ident":
            if self.peek().text == "(":
                if t.text not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {t.text}", t.pos)
                self.take()
                args = [self.expr()]
                while self.peek().text == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[t.text]:
                    raise ExprSyntaxError(
                        f"arity mismatch: {t.text} takes {FUNCTIONS[t.text]} argument(s), got {len(args)}",
                        t.pos)
                return Call(t.text, tuple(args))
            if t.text in FUNCTIONS:
                raise ExprSyntaxError(f"function {t.text} used without arguments", t.pos)
            if t.text not in self.names:
                raise ExprSyntaxError(f"unknown identifier {t.text}", t.pos)
            return Var(t.text)
        if t.kind == "end":
            raise ExprSyntaxError("unexpected end of input", t.pos)
        raise ExprSyntaxError(f"unexpected {t.text!r}", t.pos)


def parse_expr(src: str, params: Mapping[str, float] | None = None) -> Node:
    """Parse ``src``; identifiers must be r, s, xi, pi or a key of ``params``."""
    if not isinstance(src, str) or not src.strip():
        raise ExprSyntaxError("empty expression", 0)
    names = frozenset(VARIABLES) | frozenset(CONSTANTS) | frozenset(params or ())
    return _Parser(src, names).parse()


def unparse(node: Node) -> str:
    """Fully parenthesised source that re-parses to the same tree."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        return f"({node.op}{unparse(node.arg)})"
    if isinstance(node, Binary):
        return f"({unparse(node.left)} {node.op} {unparse(node.right)})"
    if isinstance(node, Call):
        return f"{node.fn}({', '.join(unparse(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


def free_variables(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Unary):
        return free_variables(node.arg)
    if isinstance(node, Binary):
        return free_variables(node.left) | free_variables(node.right)
    if isinstance(node, Call):
        out = set()
        for a in node.args:
            out |= free_variables(a)
        return out
    return set()


_FN = {"exp": dual.exp, "log": dual.log, "sqrt": dual.sqrt, "sin": dual.sin, "cos": dual.cos}


def evaluate(node: Node, env: Mapping[str, object]):
    """Evaluate over floats, arrays or Dual3 values bound in ``env``."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if node.name in env:
            return env[node.name]
        if node.name in CONSTANTS:
            return CONSTANTS[node.name]
        raise KeyError(f"unbound identifier {node.name}")
    if isinstance(node, Unary):
        v = evaluate(node.arg, env)
        return -v if node.op == "-" else v
    if isinstance(node, Binary):
        lhs = evaluate(node.left, env)
        rhs = evaluate(node.right, env)
        op = node.op
        if op == "+":
            return lhs + rhs
        if op == "-":
            return lhs - rhs
        if op == "*":
            return lhs * rhs
        if op == "/":
            if not isinstance(rhs, dual.Dual3):
                dual._guard_nonzero(rhs, "division")
            return lhs / rhs
        return dual.power(lhs, rhs)
    if isinstance(node, Call):
        args = [evaluate(a, env) for a in node.args]
        if node.fn == "pow":
            return dual.power(*args)
        return _FN[node.fn](args[0])
    raise TypeError(f"not an expression node: {node!r}")
