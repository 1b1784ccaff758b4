"""Expression trees for F(x, y, p) and a recursive-descent parser.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := ("-")? atom ("^" integer)?
    atom   := number | ident | func "(" expr ")" | "(" expr ")"
    func   := "sin" | "cos" | "exp" | "ln"

Identifiers other than ``x``, ``y``, ``p`` and the function names are
parameters.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

from .errors import ExprSyntaxError, NonIntegerExponentError, UnknownIdentifierError

VARIABLES = ("x", "y", "p")
FUNCTIONS = ("sin", "cos", "exp", "ln")
BINARY_OPS = ("+", "-", "*", "/")


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


Node = Union[Const, Var, Param, Neg, Func, BinOp, Pow]


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number | ident | op | end
    text: str
    offset: int  # byte offset into the UTF-8 source


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    byte_pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", byte_pos)
        text = m.group(0)
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, text, byte_pos))
        pos = m.end()
        byte_pos += len(text.encode("utf-8"))
    tokens.append(_Token("end", "", byte_pos))
    return tokens


class _Parser:
    def __init__(self, source: str, params: frozenset | None):
        self.tokens = _tokenize(source)
        self.i = 0
        self.params = params

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def _fail(self, expected: Iterable[str]):
        tok = self.tok
        what = "end of input" if tok.kind == "end" else f"token {tok.text!r}"
        raise ExprSyntaxError(f"unexpected {what}", tok.offset, frozenset(expected))

    def _accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def _expect(self, text: str):
        if not self._accept(text):
            self._fail({text})

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            self._fail({"+", "-", "*", "/", "end of input"})
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        negate = self._accept("-")
        node = self.atom()
        if self._accept("^"):
            tok = self.tok
            if tok.kind != "number":
                if tok.kind == "op" and tok.text in "(-":
                    raise NonIntegerExponentError("exponent must be a literal non-negative integer", tok.offset)
                self._fail({"integer"})
            if not tok.text.isdigit():
                raise NonIntegerExponentError(f"non-integer exponent {tok.text!r}", tok.offset)
            self.i += 1
            node = Pow(node, int(tok.text))
        return Neg(node) if negate else node

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "number":
            self.i += 1
            return Const(float(tok.text))
        if tok.kind == "ident":
            self.i += 1
            if tok.text in FUNCTIONS:
                self._expect("(")
                arg = self.expr()
                self._expect(")")
                return Func(tok.text, arg)
            if tok.text in VARIABLES:
                return Var(tok.text)
            if self.params is not None and tok.text not in self.params:
                raise UnknownIdentifierError(tok.text, tok.offset)
            return Param(tok.text)
        if self._accept("("):
            node = self.expr()
            self._expect(")")
            return node
        self._fail({"number", "identifier", "("})


def parse(source: str, params: Iterable[str] | None = None) -> Node:
    """Parse ``source`` into an expression tree.

    With ``params=None`` every unknown identifier becomes a parameter;
    otherwise identifiers outside ``params`` raise UnknownIdentifierError.
    """
    allowed = None if params is None else frozenset(params)
    return _Parser(source, allowed).parse()


def _is_atomic(node: Node) -> bool:
    return isinstance(node, (Var, Param, Func)) or (isinstance(node, Const) and node.value >= 0)


def _wrap(node: Node) -> str:
    text = to_source(node)
    return text if _is_atomic(node) else f"({text})"


def to_source(node: Node) -> str:
    """Render a tree as text that parses back to the same tree."""
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, (Var, Param)):
        return node.name
    if isinstance(node, Neg):
        return "-" + _wrap(node.arg)
    if isinstance(node, Func):
        return f"{node.name}({to_source(node.arg)})"
    if isinstance(node, Pow):
        return f"{_wrap(node.base)}^{node.exponent}"
    if isinstance(node, BinOp):
        return f"{_wrap(node.left)} {node.op} {_wrap(node.right)}"
    raise TypeError(f"not an expression node: {node!r}")


def parameters(node: Node) -> set[str]:
    """Names of all parameters referenced by the tree."""
    if isinstance(node, Param):
        return {node.name}
    if isinstance(node, (Neg, Func)):
        return parameters(node.arg)
    if isinstance(node, Pow):
        return parameters(node.base)
    if isinstance(node, BinOp):
        return parameters(node.left) | parameters(node.right)
    return set()


def substitute(node: Node, mapping: Mapping[str, Node]) -> Node:
    """Replace variables by subtrees (used for coordinate changes)."""
    if isinstance(node, Var):
        return mapping.get(node.name, node)
    if isinstance(node, Neg):
        return Neg(substitute(node.arg, mapping))
    if isinstance(node, Func):
        return Func(node.name, substitute(node.arg, mapping))
    if isinstance(node, Pow):
        return Pow(substitute(node.base, mapping), node.exponent)
    if isinstance(node, BinOp):
        return BinOp(node.op, substitute(node.left, mapping), substitute(node.right, mapping))
    return node


def add(a: Node, b: Node) -> Node:
    return BinOp("+", a, b)


def mul(a: Node, b: Node) -> Node:
    return BinOp("*", a, b)
