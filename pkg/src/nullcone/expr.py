"""Expression language for metric components and conformal factors.

Grammar (loosest to tightest binding)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right associative
    atom    := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'

Every NAME must be one of the four chart coordinates or a declared parameter.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

from .errors import ParseError, UnknownSymbolError

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "abs")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Sym:
    name: str
    kind: str  # "coord" or "param"
    index: int


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Sym, Neg, BinOp, Call]

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def precedence(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    return 5


@dataclass(frozen=True)
class Expression:
    """A parsed expression bound to a chart and a parameter name set."""

    root: Node
    chart: tuple[str, ...]
    params: tuple[str, ...]
    source: str = field(default="", compare=False)

    def __str__(self) -> str:
        return serialize(self)

    def depends_on_coordinates(self) -> bool:
        return _depends(self.root)

    def combine(self, op: str, other: "Expression") -> "Expression":
        """Build ``self <op> other``; both sides must share the chart."""
        if other.chart != self.chart:
            raise ValueError("cannot combine expressions over different charts")
        params = tuple(sorted(set(self.params) | set(other.params)))
        left = _rebind(self.root, params)
        right = _rebind(other.root, params)
        return Expression(BinOp(op, left, right), self.chart, params)


def _depends(node: Node) -> bool:
    if isinstance(node, Sym):
        return node.kind == "coord"
    if isinstance(node, Num):
        return False
    if isinstance(node, Neg):
        return _depends(node.operand)
    if isinstance(node, Call):
        return _depends(node.arg)
    return _depends(node.left) or _depends(node.right)


def _rebind(node: Node, params: tuple[str, ...]) -> Node:
    if isinstance(node, Sym):
        if node.kind == "param":
            return Sym(node.name, "param", params.index(node.name))
        return node
    if isinstance(node, Num):
        return node
    if isinstance(node, Neg):
        return Neg(_rebind(node.operand, params))
    if isinstance(node, Call):
        return Call(node.func, _rebind(node.arg, params))
    return BinOp(node.op, _rebind(node.left, params), _rebind(node.right, params))


# -- tokenizer ---------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {source[pos]!r}", pos, source)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, source: str, chart: Sequence[str], params: Sequence[str]):
        self.source = source
        self.chart = tuple(chart)
        self.params = tuple(params)
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.take()
        if text != value or kind != "op":
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", pos, self.source)

    def parse(self) -> Node:
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {text!r}", pos, self.source)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                if text not in FUNCTIONS:
                    raise ParseError(f"unknown function {text!r}", pos, self.source)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            if text in self.chart:
                return Sym(text, "coord", self.chart.index(text))
            if text in self.params:
                return Sym(text, "param", self.params.index(text))
            raise UnknownSymbolError(text, pos, self.source)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"unexpected {found}", pos, self.source)


def parse(source: str, chart: Sequence[str], params: Iterable[str] = ()) -> Expression:
    chart = tuple(chart)
    if len(chart) != 4 or len(set(chart)) != 4:
        raise ValueError(f"chart must name 4 distinct coordinates, got {chart!r}")
    params = tuple(sorted(set(params)))
    clash = set(chart) & set(params)
    if clash:
        raise ValueError(f"names used both as coordinate and parameter: {sorted(clash)}")
    for name in chart + params:
        if name in FUNCTIONS:
            raise ValueError(f"{name!r} is a function name")
    root = _Parser(source, chart, params).parse()
    return Expression(root, chart, params, source)


# -- serialization -------------------------------------------------------------


def _num_text(value: float) -> str:
    text = repr(float(value))
    if text in ("inf", "nan"):
        raise ValueError("non-finite literal cannot be serialized")
    return text


def serialize_node(node: Node) -> str:
    if isinstance(node, Num):
        return _num_text(node.value)
    if isinstance(node, Sym):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({serialize_node(node.arg)})"
    if isinstance(node, Neg):
        inner = serialize_node(node.operand)
        if precedence(node.operand) < 3:
            inner = f"({inner})"
        return f"-{inner}"
    p = _PREC[node.op]
    left = serialize_node(node.left)
    right = serialize_node(node.right)
    if node.op == "^":
        if precedence(node.left) <= p:
            left = f"({left})"
        if precedence(node.right) < 3:
            right = f"({right})"
        return f"{left}^{right}"
    if precedence(node.left) < p:
        left = f"({left})"
    if precedence(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


def serialize(expr: Expression | Node) -> str:
    if isinstance(expr, Expression):
        return serialize_node(expr.root)
    return serialize_node(expr)


def constant_value(source: str, values: Mapping[str, float] | None = None) -> float:
    """Evaluate an expression that uses no coordinates (e.g. ``2/3``)."""
    from .jet import eval_value

    values = dict(values or {})
    expr = parse(source, ("_c0", "_c1", "_c2", "_c3"), values.keys())
    return eval_value(expr, (0.0, 0.0, 0.0, 0.0), values)
