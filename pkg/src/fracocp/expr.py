"""A small arithmetic expression language over ``x`` and ``t``.

Grammar, loosest binding first::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("-" | "+") unary | power
    power   := primary ("^" unary)?
    primary := NUMBER | NAME | NAME "(" expr ("," expr)* ")" | "(" expr ")"

``^`` is right-associative and binds tighter than unary minus, so ``-x^2``
is ``-(x^2)`` and ``2^-1`` is one half. Evaluation is vectorized over numpy
arrays.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import special

from fracocp.errors import ArityError, ExprDomainError, ExprSyntaxError, UnknownIdentifierError

VARIABLES = ("x", "t")
CONSTANTS = ("pi", "beta", "r", "T")


def _power(base, exponent):
    base = np.asarray(base, dtype=float)
    exponent = np.asarray(exponent, dtype=float)
    fractional = exponent != np.round(exponent)
    if np.any((base < 0) & fractional):
        raise ExprDomainError("negative base raised to a non-integer power")
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.power(base, exponent)


FUNCTIONS: dict[str, tuple[int, Callable]] = {
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "exp": (1, np.exp),
    "sqrt": (1, np.sqrt),
    "abs": (1, np.abs),
    "gamma": (1, special.gamma),
    "max": (2, np.maximum),
    "min": (2, np.minimum),
}

_BINARY = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": _power,
}

# precedence used by the printer; unary minus sits between * and ^
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


# {{{ syntax tree


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Node", ...]


Node = Union[Num, Name, Neg, BinOp, Call]


# }}}


# {{{ tokenizer

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(src)))
    return tokens


# }}}


# {{{ parser


class _Parser:
    def __init__(self, src: str) -> None:
        self.tokens = _tokenize(src)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            found = self.tok.text or "end of input"
            raise ExprSyntaxError(f"expected {text!r}, found {found!r}", self.tok.pos)

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.tok.text!r}", self.tok.pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.accept("-"):
            return Neg(self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> Node:
        node = self.primary()
        if self.accept("^"):
            return BinOp("^", node, self.unary())
        return node

    def primary(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(float(tok.text))
        if tok.kind == "name":
            self.i += 1
            if self.accept("("):
                return self.call(tok)
            if tok.text in FUNCTIONS:
                raise ExprSyntaxError(f"function {tok.text!r} needs arguments", tok.pos)
            if tok.text not in VARIABLES + CONSTANTS:
                raise UnknownIdentifierError(f"unknown identifier {tok.text!r}", tok.pos)
            return Name(tok.text)
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        found = tok.text or "end of input"
        raise ExprSyntaxError(f"unexpected {found!r}", tok.pos)

    def call(self, name_tok: _Token) -> Node:
        if name_tok.text not in FUNCTIONS:
            raise UnknownIdentifierError(f"unknown function {name_tok.text!r}", name_tok.pos)
        args = [self.expr()]
        while self.accept(","):
            args.append(self.expr())
        self.expect(")")
        arity = FUNCTIONS[name_tok.text][0]
        if len(args) != arity:
            raise ArityError(
                f"{name_tok.text} takes {arity} argument(s), got {len(args)}", name_tok.pos
            )
        return Call(name_tok.text, tuple(args))


# }}}


# {{{ public interface


def _eval(node: Node, env: dict[str, object]):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Name):
        return env[node.name]
    if isinstance(node, Neg):
        return np.negative(_eval(node.operand, env))
    if isinstance(node, BinOp):
        left, right = _eval(node.left, env), _eval(node.right, env)
        with np.errstate(divide="ignore", invalid="ignore"):
            return _BINARY[node.op](left, right)
    if isinstance(node, Call):
        fn = FUNCTIONS[node.func][1]
        with np.errstate(divide="ignore", invalid="ignore"):
            return fn(*(_eval(a, env) for a in node.args))
    raise TypeError(f"not an expression node: {node!r}")


def _format_number(value: float) -> str:
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


def _pretty(node: Node) -> tuple[str, int]:
    """Text and precedence of the outermost operator (5 for atoms)."""
    if isinstance(node, Num):
        return _format_number(node.value), 5
    if isinstance(node, Name):
        return node.name, 5
    if isinstance(node, Call):
        return f"{node.func}({', '.join(_pretty(a)[0] for a in node.args)})", 5
    if isinstance(node, Neg):
        text, prec = _pretty(node.operand)
        if prec < _PREC["neg"]:
            text = f"({text})"
        return f"-{text}", _PREC["neg"]

    prec = _PREC[node.op]
    lt, lp = _pretty(node.left)
    rt, rp = _pretty(node.right)
    if node.op == "^":
        # right-associative: only the base needs protecting at equal precedence
        if lp <= prec:
            lt = f"({lt})"
        if rp < _PREC["neg"]:
            rt = f"({rt})"
    else:
        if lp < prec:
            lt = f"({lt})"
        if rp <= prec:
            rt = f"({rt})"
    sep = "^" if node.op == "^" else f" {node.op} "
    return f"{lt}{sep}{rt}", prec


@dataclass(frozen=True)
class Expr:
    """A parsed expression together with its source text."""

    source: str
    tree: Node

    def variables(self) -> set[str]:
        found: set[str] = set()

        def walk(node: Node) -> None:
            if isinstance(node, Name):
                found.add(node.name)
            elif isinstance(node, Neg):
                walk(node.operand)
            elif isinstance(node, BinOp):
                walk(node.left)
                walk(node.right)
            elif isinstance(node, Call):
                for a in node.args:
                    walk(a)

        walk(self.tree)
        return found

    def evaluate(self, *, x=0.0, t=0.0, beta=None, r=None, T=None) -> np.ndarray:
        env = {"x": x, "t": t, "pi": math.pi, "beta": beta, "r": r, "T": T}
        missing = sorted(n for n in self.variables() if env[n] is None)
        if missing:
            raise UnknownIdentifierError(f"no value bound for {', '.join(missing)}")
        value = _eval(self.tree, env)
        shape = np.broadcast(np.asarray(x), np.asarray(t)).shape
        return np.broadcast_to(np.asarray(value, dtype=float), shape).copy()

    def pretty(self) -> str:
        return _pretty(self.tree)[0]


def parse(src: str) -> Expr:
    """Parse *src*; errors report the offending character offset."""
    return Expr(src, _Parser(src).parse())


# }}}
