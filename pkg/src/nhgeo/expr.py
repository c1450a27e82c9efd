"""Scalar coefficient expressions over coordinates x1..xm.

Grammar (standard infix, highest precedence first)::

    atom     := NUMBER | VAR | FUNC '(' expr ')' | '(' expr ')'
    power    := atom [ '^' INTEGER ]          INTEGER may carry a leading '-'
    unary    := '-' unary | power
    term     := unary { ('*' | '/') unary }
    expr     := term { ('+' | '-') term }

Variables are named ``x1`` .. ``x{dim}``; functions are ``sin``, ``cos``,
``exp`` and ``sqrt``.  Exponents must be integer constants.

Expressions evaluate on floats (:func:`evaluate`) and on forward-mode dual
numbers (:func:`eval_dual`), which give exact first partial derivatives.
:func:`compile_jet` turns a batch of expressions into straight-line Python
returning values and full gradients; it is the fast path used by the
geometry code and is tested against the tree-walking evaluators.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ExprEvalError, ExprSyntaxError

FUNCTIONS = ("sin", "cos", "exp", "sqrt")
BINARY_OPS = ("+", "-", "*", "/", "^")


@dataclass(frozen=True)
class ExprNode:
    """Immutable AST node.

    ``kind`` is one of ``const``, ``var``, ``unary`` (ops ``neg`` and the
    functions) or ``binary`` (ops ``+ - * / ^``; for ``^`` the right child is
    an integer constant).  ``pos`` is the source offset, or -1 for nodes built
    programmatically.
    """

    kind: str
    op: str | None = None
    value: float = 0.0
    index: int = -1
    children: tuple["ExprNode", ...] = ()
    pos: int = -1

    def __str__(self):
        return to_source(self)

    def variables(self) -> set[int]:
        if self.kind == "var":
            return {self.index}
        out: set[int] = set()
        for c in self.children:
            out |= c.variables()
        return out

    def is_constant(self) -> bool:
        return not self.variables()


def const(value: float) -> ExprNode:
    return ExprNode("const", value=float(value))


def var(index: int) -> ExprNode:
    return ExprNode("var", index=index)


def neg(a: ExprNode) -> ExprNode:
    return ExprNode("unary", op="neg", children=(a,))


def binary(op: str, a: ExprNode, b: ExprNode) -> ExprNode:
    if op not in BINARY_OPS:
        raise ValueError(f"unknown binary operator {op!r}")
    if op == "^" and not (b.kind == "const" and float(b.value).is_integer()):
        raise ValueError("exponent must be an integer constant")
    return ExprNode("binary", op=op, children=(a, b))


def add(a: ExprNode, b: ExprNode) -> ExprNode:
    return binary("+", a, b)


def mul(a: ExprNode, b: ExprNode) -> ExprNode:
    return binary("*", a, b)


# --------------------------------------------------------------------------
# Dual numbers
# --------------------------------------------------------------------------


class DualNumber:
    """a + b·ε with ε² = 0."""

    __slots__ = ("value", "derivative")

    def __init__(self, value, derivative=0.0):
        self.value = value
        self.derivative = derivative

    def __repr__(self):
        return f"DualNumber({self.value!r}, {self.derivative!r})"

    def __eq__(self, other):
        if isinstance(other, DualNumber):
            return self.value == other.value and self.derivative == other.derivative
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.derivative))

    def __iter__(self):
        yield self.value
        yield self.derivative

    def __add__(self, other):
        if isinstance(other, DualNumber):
            return DualNumber(self.value + other.value, self.derivative + other.derivative)
        return DualNumber(self.value + other, self.derivative)

    __radd__ = __add__

    def __neg__(self):
        return DualNumber(-self.value, -self.derivative)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, DualNumber):
            return DualNumber(
                self.value * other.value,
                self.value * other.derivative + self.derivative * other.value,
            )
        return DualNumber(self.value * other, self.derivative * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, DualNumber):
            if other.value == 0:
                raise ZeroDivisionError("dual division by zero real part")
            q = self.value / other.value
            return DualNumber(q, (self.derivative - q * other.derivative) / other.value)
        return DualNumber(self.value / other, self.derivative / other)

    def __rtruediv__(self, other):
        return DualNumber(other) / self

    def __pow__(self, k: int):
        if k == 0:
            return DualNumber(1.0, 0.0)
        return DualNumber(self.value**k, k * self.value ** (k - 1) * self.derivative)

    def sin(self):
        return DualNumber(math.sin(self.value), math.cos(self.value) * self.derivative)

    def cos(self):
        return DualNumber(math.cos(self.value), -math.sin(self.value) * self.derivative)

    def exp(self):
        e = math.exp(self.value)
        return DualNumber(e, e * self.derivative)

    def sqrt(self):
        s = math.sqrt(self.value)
        return DualNumber(s, self.derivative / (2.0 * s))


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)
_VAR = re.compile(r"x([1-9]\d*)$")


def _tokenize(source: str):
    tokens = []
    pos = 0
    while pos < len(source):
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", source, pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, dim: int):
        self.source = source
        self.dim = dim
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ExprSyntaxError(message, self.source, tok[2])

    def expect(self, value):
        tok = self.take()
        if tok[1] != value or tok[0] == "num":
            raise self.error(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok)
        return tok

    def parse(self) -> ExprNode:
        node = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            tok = self.take()
            node = ExprNode("binary", op=tok[1], children=(node, self.term()), pos=tok[2])
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            tok = self.take()
            node = ExprNode("binary", op=tok[1], children=(node, self.unary()), pos=tok[2])
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return ExprNode("unary", op="neg", children=(self.unary(),), pos=tok[2])
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.take()
            exponent = self.integer_exponent()
            node = ExprNode("binary", op="^", children=(base, exponent), pos=tok[2])
            if self.peek()[1] == "^":
                raise self.error("chained exponents are not supported; use parentheses")
            return node
        return base

    def integer_exponent(self):
        tok = self.peek()
        paren = tok[1] == "(" and tok[0] == "op"
        if paren:
            self.take()
        sign = 1
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            sign = -1
        tok = self.take()
        if tok[0] != "num" or not re.fullmatch(r"\d+", tok[1]):
            raise self.error("exponent must be an integer constant", tok)
        if paren:
            self.expect(")")
        return ExprNode("const", value=float(sign * int(tok[1])), pos=tok[2])

    def atom(self):
        tok = self.take()
        kind, text, pos = tok
        if kind == "num":
            return ExprNode("const", value=float(text), pos=pos)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "ident":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return ExprNode("unary", op=text, children=(arg,), pos=pos)
            m = _VAR.match(text)
            if m is None:
                raise ExprSyntaxError(f"unknown identifier {text!r}", self.source, pos)
            index = int(m.group(1)) - 1
            if index >= self.dim:
                raise ExprSyntaxError(
                    f"variable {text!r} out of range for dimension {self.dim}", self.source, pos
                )
            return ExprNode("var", index=index, pos=pos)
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", self.source, pos)
        raise ExprSyntaxError(f"unexpected token {text!r}", self.source, pos)


def parse(source: str, dim: int) -> ExprNode:
    """Parse ``source`` into an :class:`ExprNode` over ``dim`` coordinates."""
    if not isinstance(source, str) or not source.strip():
        raise ExprSyntaxError("empty expression", str(source), 0)
    if dim < 1:
        raise ValueError("dimension must be positive")
    return _Parser(source, dim).parse()


def as_expr(value, dim: int) -> ExprNode:
    """Coerce a number, source string or node to an :class:`ExprNode`."""
    if isinstance(value, ExprNode):
        bad = [i for i in value.variables() if i >= dim]
        if bad:
            raise ValueError(f"variable index {bad[0]} out of range for dimension {dim}")
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return const(value)
    return parse(str(value), dim)


# --------------------------------------------------------------------------
# Pretty printing
# --------------------------------------------------------------------------


def to_source(node: ExprNode) -> str:
    """Render ``node`` as fully parenthesized source that parses back."""
    if node.kind == "const":
        v = node.value
        if v.is_integer() and abs(v) < 1e15:
            text = str(int(v))
        else:
            text = repr(v)
        return f"(-{text[1:]})" if v < 0 or text.startswith("-") else text
    if node.kind == "var":
        return f"x{node.index + 1}"
    if node.kind == "unary":
        inner = to_source(node.children[0])
        if node.op == "neg":
            return f"(-{inner})"
        return f"{node.op}({inner})"
    a, b = node.children
    if node.op == "^":
        return f"({to_source(a)}^{int(b.value)})"
    return f"({to_source(a)} {node.op} {to_source(b)})"


# --------------------------------------------------------------------------
# Tree-walking evaluation
# --------------------------------------------------------------------------


def _walk(node: ExprNode, x):
    kind = node.kind
    if kind == "const":
        return node.value
    if kind == "var":
        return x[node.index]
    if kind == "unary":
        a = _walk(node.children[0], x)
        op = node.op
        if op == "neg":
            return -a
        dual = isinstance(a, DualNumber)
        if op == "sqrt":
            real = a.value if dual else a
            if real < 0 or (dual and real == 0):
                raise ExprEvalError(f"sqrt domain error for argument {float(real)!r}", node.pos)
            return a.sqrt() if dual else math.sqrt(a)
        if op == "exp":
            try:
                return a.exp() if dual else math.exp(a)
            except OverflowError:
                raise ExprEvalError("exp overflow", node.pos) from None
        if op == "sin":
            return a.sin() if dual else math.sin(a)
        if op == "cos":
            return a.cos() if dual else math.cos(a)
        raise ExprEvalError(f"unknown function {op!r}", node.pos)
    a = _walk(node.children[0], x)
    op = node.op
    if op == "^":
        k = int(node.children[1].value)
        real = a.value if isinstance(a, DualNumber) else a
        if k < 0 and real == 0:
            raise ExprEvalError("division by zero in negative power", node.pos)
        return a**k
    b = _walk(node.children[1], x)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    real = b.value if isinstance(b, DualNumber) else b
    if real == 0:
        raise ExprEvalError("division by zero", node.pos)
    return a / b


def evaluate(e: ExprNode, point: Sequence[float]) -> float:
    """Value of ``e`` at ``point``."""
    return float(_walk(e, [float(v) for v in point]))


# Public alias matching the operation name used in the docs.
eval = evaluate  # noqa: A001


def eval_dual(e: ExprNode, point: Sequence[float], direction: int) -> DualNumber:
    """Value and exact partial derivative along coordinate ``direction``."""
    if not 0 <= direction < len(point):
        raise ValueError(f"direction {direction} out of range for dimension {len(point)}")
    x = [DualNumber(float(v), 1.0 if i == direction else 0.0) for i, v in enumerate(point)]
    out = _walk(e, x)
    if not isinstance(out, DualNumber):
        return DualNumber(float(out), 0.0)
    return DualNumber(float(out.value), float(out.derivative))


def gradient(e: ExprNode, point: Sequence[float]) -> np.ndarray:
    """All first partials via one dual pass per coordinate."""
    return np.array([eval_dual(e, point, d).derivative for d in range(len(point))])


# --------------------------------------------------------------------------
# Compiled jets
# --------------------------------------------------------------------------


def _raise_div(pos):
    raise ExprEvalError("division by zero", pos)


def _raise_sqrt(value, pos):
    raise ExprEvalError(f"sqrt domain error for argument {float(value)!r}", pos)


def _exp_at(value, pos):
    try:
        return math.exp(value)
    except OverflowError:
        raise ExprEvalError("exp overflow", pos) from None


class _Emitter:
    def __init__(self):
        self.lines: list[str] = []
        self.count = 0

    def tmp(self, code: str) -> str:
        name = f"t{self.count}"
        self.count += 1
        self.lines.append(f"    {name} = {code}")
        return name

    def emit(self, node: ExprNode):
        """Return (value code, {direction: derivative code}) for ``node``."""
        kind = node.kind
        if kind == "const":
            return repr(node.value), {}
        if kind == "var":
            return f"x{node.index}", {node.index: "1.0"}
        if kind == "unary":
            a, da = self.emit(node.children[0])
            op = node.op
            if op == "neg":
                return self.tmp(f"-{a}"), {d: self.tmp(f"-{c}") for d, c in da.items()}
            if op == "sqrt":
                self.lines.append(f"    if {a} < 0.0: _raise_sqrt({a}, {node.pos})")
                v = self.tmp(f"_sqrt({a})")
                if da:
                    self.lines.append(f"    if {v} == 0.0: _raise_sqrt({a}, {node.pos})")
                return v, {d: self.tmp(f"{c} / (2.0 * {v})") for d, c in da.items()}
            if op == "exp":
                v = self.tmp(f"_exp({a}, {node.pos})")
                return v, {d: self.tmp(f"{v} * {c}") for d, c in da.items()}
            if op == "sin":
                v = self.tmp(f"_sin({a})")
                cs = self.tmp(f"_cos({a})") if da else None
                return v, {d: self.tmp(f"{cs} * {c}") for d, c in da.items()}
            if op == "cos":
                v = self.tmp(f"_cos({a})")
                sn = self.tmp(f"_sin({a})") if da else None
                return v, {d: self.tmp(f"-{sn} * {c}") for d, c in da.items()}
            raise ValueError(f"unknown function {op!r}")
        op = node.op
        a, da = self.emit(node.children[0])
        if op == "^":
            k = int(node.children[1].value)
            if k == 0:
                return "1.0", {}
            if k < 0:
                self.lines.append(f"    if {a} == 0.0: _raise_div({node.pos})")
            v = self.tmp(f"{a} ** {k}")
            if not da:
                return v, {}
            p = self.tmp(f"{k}.0 * {a} ** {k - 1}") if k != 1 else "1.0"
            return v, {d: self.tmp(f"{p} * {c}") for d, c in da.items()}
        b, db = self.emit(node.children[1])
        if op in ("+", "-"):
            v = self.tmp(f"{a} {op} {b}")
            ders = {}
            for d in sorted(set(da) | set(db)):
                if d in da and d in db:
                    ders[d] = self.tmp(f"{da[d]} {op} {db[d]}")
                elif d in da:
                    ders[d] = da[d]
                else:
                    ders[d] = db[d] if op == "+" else self.tmp(f"-{db[d]}")
            return v, ders
        if op == "*":
            v = self.tmp(f"{a} * {b}")
            ders = {}
            for d in sorted(set(da) | set(db)):
                terms = []
                if d in da:
                    terms.append(f"{da[d]} * {b}")
                if d in db:
                    terms.append(f"{a} * {db[d]}")
                ders[d] = self.tmp(" + ".join(terms))
            return v, ders
        # division
        self.lines.append(f"    if {b} == 0.0: _raise_div({node.pos})")
        v = self.tmp(f"{a} / {b}")
        ders = {}
        for d in sorted(set(da) | set(db)):
            if d in da and d in db:
                ders[d] = self.tmp(f"({da[d]} - {v} * {db[d]}) / {b}")
            elif d in da:
                ders[d] = self.tmp(f"{da[d]} / {b}")
            else:
                ders[d] = self.tmp(f"-{v} * {db[d]} / {b}")
        return v, ders


def compile_jet(exprs: Sequence[ExprNode], dim: int) -> Callable[[np.ndarray], tuple]:
    """Compile ``exprs`` into ``f(x) -> (values[k], grads[k, dim])``.

    Derivatives are propagated in forward mode, restricted at compile time to
    the coordinates each node actually depends on.
    """
    em = _Emitter()
    values = []
    grads = []
    for e in exprs:
        v, d = em.emit(e)
        values.append(v)
        grads.append(d)
    head = [f"    x{i} = x[{i}]" for i in range(dim)]
    tail = [f"    vals = _array([{', '.join(values)}{',' if len(values) == 1 else ''}], dtype=float)"]
    tail.append(f"    g = _zeros(({len(exprs)}, {dim}))")
    for k, d in enumerate(grads):
        for direction, code in d.items():
            tail.append(f"    g[{k}, {direction}] = {code}")
    tail.append("    return vals, g")
    src = "def _jet(x):\n" + "\n".join(head + em.lines + tail) + "\n"
    namespace = {
        "_array": np.array,
        "_zeros": np.zeros,
        "_sqrt": math.sqrt,
        "_exp": _exp_at,
        "_sin": math.sin,
        "_cos": math.cos,
        "_raise_div": _raise_div,
        "_raise_sqrt": _raise_sqrt,
    }
    exec(compile(src, "<nhgeo-jet>", "exec"), namespace)
    fn = namespace["_jet"]
    fn.source = src
    return fn
