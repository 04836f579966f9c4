"""Second-order jet arithmetic for expressions.

Expressions are compiled to straight-line Python that propagates the value,
the gradient and the upper triangle of the Hessian through every node using
the product and chain rules. Derivatives that are structurally zero are never
emitted, and structurally identical subtrees are evaluated once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError
from .expr import Call, Expression, Neg, Node, Num, Sym, serialize_node

PAIRS = tuple((k, l) for k in range(4) for l in range(k, 4))
PAIR_INDEX = {pair: n for n, pair in enumerate(PAIRS)}


@dataclass(frozen=True)
class Jet2:
    value: float
    grad: np.ndarray
    hess: np.ndarray

    def __add__(self, other: "Jet2") -> "Jet2":
        return Jet2(self.value + other.value, self.grad + other.grad, self.hess + other.hess)

    def scale(self, a: float) -> "Jet2":
        return Jet2(a * self.value, a * self.grad, a * self.hess)


class _Fail(Exception):
    def __init__(self, nid: int, message: str):
        self.nid = nid
        self.message = message


# Each helper returns (f(u), f'(u), f''(u)).

def _sin(u, nid):
    s, c = math.sin(u), math.cos(u)
    return s, c, -s


def _cos(u, nid):
    s, c = math.sin(u), math.cos(u)
    return c, -s, -c


def _tan(u, nid):
    c = math.cos(u)
    if c == 0.0:
        raise _Fail(nid, "tan evaluated at a pole")
    t = math.sin(u) / c
    sec2 = 1.0 + t * t
    return t, sec2, 2.0 * t * sec2


def _exp(u, nid):
    try:
        e = math.exp(u)
    except OverflowError:
        raise _Fail(nid, "exp overflow") from None
    return e, e, e


def _log(u, nid):
    if u <= 0.0:
        raise _Fail(nid, "log of non-positive argument")
    return math.log(u), 1.0 / u, -1.0 / (u * u)


def _logbase(u, nid):
    if u <= 0.0:
        raise _Fail(nid, "real exponent requires a positive base")
    return math.log(u), 1.0 / u, -1.0 / (u * u)


def _sqrt(u, nid):
    if u <= 0.0:
        raise _Fail(nid, "sqrt of non-positive argument")
    s = math.sqrt(u)
    return s, 0.5 / s, -0.25 / (s * u)


def _sinh(u, nid):
    try:
        return math.sinh(u), math.cosh(u), math.sinh(u)
    except OverflowError:
        raise _Fail(nid, "sinh overflow") from None


def _cosh(u, nid):
    try:
        return math.cosh(u), math.sinh(u), math.cosh(u)
    except OverflowError:
        raise _Fail(nid, "cosh overflow") from None


def _abs(u, nid):
    if u == 0.0:
        raise _Fail(nid, "abs is not differentiable at 0")
    return abs(u), math.copysign(1.0, u), 0.0


def _inv(u, nid):
    if u == 0.0:
        raise _Fail(nid, "division by zero")
    r = 1.0 / u
    return r, -r * r, 2.0 * r * r * r


def _powc(u, c, nid):
    """u^c for a coordinate-independent exponent c."""
    if c == round(c) and abs(c) <= 1024:
        n = int(round(c))
        if n == 0:
            return 1.0, 0.0, 0.0
        if n < 0 and u == 0.0:
            raise _Fail(nid, "division by zero")
        f0 = u**n
        f1 = n * u ** (n - 1)
        f2 = 0.0 if n == 1 else n * (n - 1) * u ** (n - 2)
        return f0, f1, f2
    if u <= 0.0:
        raise _Fail(nid, "real exponent requires a positive base")
    f0 = u**c
    return f0, c * f0 / u, c * (c - 1.0) * f0 / (u * u)


def _div(a, b, nid):
    if b == 0.0:
        raise _Fail(nid, "division by zero")
    return a / b


_HELPERS = {
    "_sin": _sin, "_cos": _cos, "_tan": _tan, "_exp": _exp, "_log": _log,
    "_logbase": _logbase, "_sqrt": _sqrt, "_sinh": _sinh, "_cosh": _cosh,
    "_abs": _abs, "_inv": _inv, "_powc": _powc, "_div": _div,
}


class _Emitter:
    """Generates code for one or more roots sharing a common subexpression table."""

    def __init__(self, order: int):
        self.order = order
        self.lines: list[str] = []
        self.memo: dict[Node, tuple] = {}
        self.nodes: list[Node] = []
        self.counter = 0

    def fresh(self) -> str:
        self.counter += 1
        return f"t{self.counter}"

    def assign(self, expr: str) -> str:
        name = self.fresh()
        self.lines.append(f"    {name} = {expr}")
        return name

    def node_id(self, node: Node) -> int:
        self.nodes.append(node)
        return len(self.nodes) - 1

    def emit(self, node: Node):
        hit = self.memo.get(node)
        if hit is not None:
            return hit
        result = self._emit(node)
        self.memo[node] = result
        return result

    def _emit(self, node: Node):
        if isinstance(node, Num):
            return repr(float(node.value)), {}, {}
        if isinstance(node, Sym):
            if node.kind == "param":
                return self.assign(f"p[{node.index}]"), {}, {}
            v = self.assign(f"x[{node.index}]")
            return v, {node.index: "1.0"}, {}
        if isinstance(node, Neg):
            v, g, h = self.emit(node.operand)
            return (
                self.assign(f"-{v}"),
                {k: self.assign(f"-{e}") for k, e in g.items()},
                {kl: self.assign(f"-{e}") for kl, e in h.items()},
            )
        if isinstance(node, Call):
            u = self.emit(node.arg)
            helper = {"abs": "_abs"}.get(node.func, "_" + node.func)
            return self.chain(u, helper, node)
        if node.op in "+-":
            return self.add(self.emit(node.left), self.emit(node.right), node.op)
        if node.op == "*":
            return self.mul(self.emit(node.left), self.emit(node.right))
        if node.op == "/":
            a = self.emit(node.left)
            b = self.emit(node.right)
            if not b[1]:
                nid = self.node_id(node)
                return (
                    self.assign(f"_div({a[0]}, {b[0]}, {nid})"),
                    {k: self.assign(f"{e} / {b[0]}") for k, e in a[1].items()},
                    {kl: self.assign(f"{e} / {b[0]}") for kl, e in a[2].items()},
                )
            return self.mul(a, self.chain(b, "_inv", node))
        # power
        base = self.emit(node.left)
        expo = self.emit(node.right)
        if not expo[1]:
            return self.chain(base, "_powc", node, extra=expo[0])
        logb = self.chain(base, "_logbase", node)
        return self.chain(self.mul(expo, logb), "_exp", node)

    def add(self, a, b, op):
        va, ga, ha = a
        vb, gb, hb = b
        v = self.assign(f"{va} {op} {vb}")
        g = {}
        for k in sorted(set(ga) | set(gb)):
            if k in ga and k in gb:
                g[k] = self.assign(f"{ga[k]} {op} {gb[k]}")
            elif k in ga:
                g[k] = ga[k]
            else:
                g[k] = gb[k] if op == "+" else self.assign(f"-{gb[k]}")
        h = {}
        for kl in sorted(set(ha) | set(hb)):
            if kl in ha and kl in hb:
                h[kl] = self.assign(f"{ha[kl]} {op} {hb[kl]}")
            elif kl in ha:
                h[kl] = ha[kl]
            else:
                h[kl] = hb[kl] if op == "+" else self.assign(f"-{hb[kl]}")
        return v, g, h

    def mul(self, a, b):
        va, ga, ha = a
        vb, gb, hb = b
        v = self.assign(f"{va} * {vb}")
        g = {}
        for k in sorted(set(ga) | set(gb)):
            terms = []
            if k in ga:
                terms.append(f"{ga[k]} * {vb}")
            if k in gb:
                terms.append(f"{va} * {gb[k]}")
            g[k] = self.assign(" + ".join(terms))
        h = {}
        if self.order >= 2:
            keys = set(ha) | set(hb)
            keys |= {(min(k, l), max(k, l)) for k in ga for l in gb}
            for kl in sorted(keys):
                k, l = kl
                terms = []
                if kl in ha:
                    terms.append(f"{ha[kl]} * {vb}")
                if kl in hb:
                    terms.append(f"{va} * {hb[kl]}")
                if k in ga and l in gb:
                    terms.append(f"{ga[k]} * {gb[l]}")
                if k != l and l in ga and k in gb:
                    terms.append(f"{ga[l]} * {gb[k]}")
                elif k == l and k in ga and k in gb:
                    terms[-1] = f"2.0 * {ga[k]} * {gb[k]}"
                h[kl] = self.assign(" + ".join(terms))
        return v, g, h

    def chain(self, u, helper: str, node: Node, extra: str | None = None):
        vu, gu, hu = u
        nid = self.node_id(node)
        f0, f1, f2 = self.fresh(), self.fresh(), self.fresh()
        args = f"{vu}, {extra}, {nid}" if extra is not None else f"{vu}, {nid}"
        self.lines.append(f"    {f0}, {f1}, {f2} = {helper}({args})")
        g = {k: self.assign(f"{f1} * {e}") for k, e in gu.items()}
        h = {}
        if self.order >= 2:
            keys = set(hu) | {(k, l) for k in gu for l in gu if k <= l}
            for kl in sorted(keys):
                k, l = kl
                terms = []
                if kl in hu:
                    terms.append(f"{f1} * {hu[kl]}")
                if k in gu and l in gu:
                    terms.append(f"{f2} * {gu[k]} * {gu[l]}")
                h[kl] = self.assign(" + ".join(terms))
        return f0, g, h

    def outputs(self, result) -> list[str]:
        v, g, h = result
        out = [v]
        if self.order >= 1:
            out += [g.get(k, "0.0") for k in range(4)]
        if self.order >= 2:
            out += [h.get(kl, "0.0") for kl in PAIRS]
        return out


def _width(order: int) -> int:
    return (1, 5, 15)[order]


@lru_cache(maxsize=512)
def compile_roots(roots: tuple[Node, ...], order: int):
    """Compile ``roots`` into ``f(x, p) -> list`` of concatenated jet blocks.

    Each block is ``[v]`` (order 0), ``[v, g0..g3]`` (order 1) or
    ``[v, g0..g3, h00, h01, h02, h03, h11, h12, h13, h22, h23, h33]`` (order 2).
    """
    em = _Emitter(order)
    outs: list[str] = []
    for root in roots:
        outs += em.outputs(em.emit(root))
    body = "\n".join(em.lines)
    code = f"def _jet(x, p):\n{body}\n    return [{', '.join(outs)}]\n"
    namespace = dict(_HELPERS)
    exec(compile(code, "<jet>", "exec"), namespace)
    inner = namespace["_jet"]
    nodes = list(em.nodes)

    def run(x, p):
        try:
            return inner(x, p)
        except _Fail as fail:
            raise DomainError(fail.message, serialize_node(nodes[fail.nid])) from None
        except (OverflowError, ZeroDivisionError) as exc:
            raise DomainError(str(exc)) from None

    run.source = code
    return run


def param_vector(params: Sequence[str], values: Mapping[str, float]) -> tuple[float, ...]:
    try:
        return tuple(float(values[name]) for name in params)
    except KeyError as exc:
        raise ValueError(f"no value given for parameter {exc.args[0]!r}") from None


def eval_blocks(exprs: Sequence[Expression], point, values: Mapping[str, float], order: int) -> np.ndarray:
    """Evaluate several expressions sharing chart and parameters; shape (n, width)."""
    if not exprs:
        return np.zeros((0, _width(order)))
    params = exprs[0].params
    fn = compile_roots(tuple(e.root for e in exprs), order)
    x = tuple(float(c) for c in point)
    if len(x) != 4:
        raise ValueError("a chart point has exactly 4 coordinates")
    flat = fn(x, param_vector(params, values))
    return np.array(flat, dtype=float).reshape(len(exprs), _width(order))


def unpack_hessian(block: np.ndarray) -> np.ndarray:
    """Rebuild full symmetric Hessians from the packed upper triangle (last axis of 10)."""
    out = np.empty(block.shape[:-1] + (4, 4))
    for n, (k, l) in enumerate(PAIRS):
        out[..., k, l] = block[..., n]
        out[..., l, k] = block[..., n]
    return out


def eval_jet2(expr: Expression, point, params: Mapping[str, float] | None = None) -> Jet2:
    block = eval_blocks([expr], point, params or {}, 2)[0]
    return Jet2(float(block[0]), block[1:5].copy(), unpack_hessian(block[5:]))


def eval_value(expr: Expression, point, params: Mapping[str, float] | None = None) -> float:
    return float(eval_blocks([expr], point, params or {}, 0)[0, 0])
