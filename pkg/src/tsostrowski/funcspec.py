"""Single-variable expression functions ``f(t)``.

Grammar (lowest to highest precedence, all binary operators
left-associative)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' ['-'] INTEGER)*
    primary := NUMBER | 't' | NAME '(' expr ')' | '(' expr ')'

with NAME one of sin, cos, exp, log, sqrt.  Constants are kept as exact
fractions, so trees without transcendental functions evaluate exactly on
``Fraction`` arguments.  Float evaluation goes through numpy and accepts
arrays.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Union

import numpy as np

from .errors import DomainError, ExprSyntaxError, NotDifferentiable, UnknownFunction

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exp: int


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Pow, Call]

ZERO = Num(Fraction(0))
ONE = Num(Fraction(1))
T = Var()


# -- smart constructors (light algebraic simplification) -------------------

def num(v) -> Num:
    return Num(Fraction(v))


def neg(x: Node) -> Node:
    if isinstance(x, Num):
        return Num(-x.value)
    if isinstance(x, Neg):
        return x.arg
    return Neg(x)


def add(x: Node, y: Node) -> Node:
    if isinstance(x, Num) and isinstance(y, Num):
        return Num(x.value + y.value)
    if x == ZERO:
        return y
    if y == ZERO:
        return x
    return BinOp("+", x, y)


def sub(x: Node, y: Node) -> Node:
    if isinstance(x, Num) and isinstance(y, Num):
        return Num(x.value - y.value)
    if y == ZERO:
        return x
    if x == ZERO:
        return neg(y)
    return BinOp("-", x, y)


def mul(x: Node, y: Node) -> Node:
    if isinstance(x, Num) and isinstance(y, Num):
        return Num(x.value * y.value)
    if x == ZERO or y == ZERO:
        return ZERO
    if x == ONE:
        return y
    if y == ONE:
        return x
    return BinOp("*", x, y)


def div(x: Node, y: Node) -> Node:
    if y == ONE:
        return x
    if x == ZERO and y != ZERO:
        return ZERO
    return BinOp("/", x, y)


def power(x: Node, n: int) -> Node:
    if n == 0:
        return ONE
    if n == 1:
        return x
    return Pow(x, n)


# -- parsing ----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]\w*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = len(text) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            what = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {what}", pos)

    def parse(self) -> Node:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", pos)
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
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            arg = self.unary()
            return Num(-arg.value) if isinstance(arg, Num) else Neg(arg)
        return self.power()

    def power(self) -> Node:
        node = self.primary()
        while self.peek()[1] == "^":
            self.take()
            node = Pow(node, self.exponent())
        return node

    def exponent(self) -> int:
        parens = self.peek()[1] == "("
        if parens:
            self.take()
        sign = 1
        if self.peek()[1] == "-":
            self.take()
            sign = -1
        kind, val, pos = self.take()
        if kind != "num" or not val.isdigit():
            raise ExprSyntaxError("exponent must be an integer literal", pos)
        if parens:
            self.expect(")")
        return sign * int(val)

    def primary(self) -> Node:
        kind, val, pos = self.take()
        if kind == "num":
            return Num(Fraction(val))
        if kind == "name":
            if val == "t":
                return T
            if self.peek()[1] != "(":
                raise ExprSyntaxError(f"unknown variable {val!r}; the only variable is 't'", pos)
            if val not in FUNCTIONS:
                raise UnknownFunction(f"unknown function {val!r} at position {pos}")
            self.take()
            arg = self.expr()
            self.expect(")")
            return Call(val, arg)
        if val == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {what}", pos)


# -- printing ---------------------------------------------------------------

def _fmt_number(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    d = v.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        # not a terminating decimal; never produced by parsing
        return f"{float(v)!r}"
    places = max(twos, fives)
    scaled = abs(v) * 10**places
    digits = str(scaled.numerator).rjust(places + 1, "0")
    text = f"{digits[:-places]}.{digits[-places:]}".rstrip("0")
    return ("-" if v < 0 else "") + text


def _level(node: Node) -> int:
    if isinstance(node, BinOp):
        return 1 if node.op in "+-" else 2
    if isinstance(node, Neg) or (isinstance(node, Num) and node.value < 0):
        return 3
    if isinstance(node, Pow):
        return 4
    return 5


def to_text(node: Node) -> str:
    def wrap(child, min_level):
        s = to_text(child)
        return f"({s})" if _level(child) < min_level else s

    if isinstance(node, Num):
        return _fmt_number(node.value)
    if isinstance(node, Var):
        return "t"
    if isinstance(node, Neg):
        return "-" + wrap(node.arg, 3)
    if isinstance(node, BinOp):
        lvl = _level(node)
        sep = f" {node.op} " if lvl == 1 else node.op
        return wrap(node.left, lvl) + sep + wrap(node.right, lvl + 1)
    if isinstance(node, Pow):
        return f"{wrap(node.base, 4)}^{node.exp}"
    if isinstance(node, Call):
        return f"{node.name}({to_text(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


# -- evaluation -------------------------------------------------------------

def _eval_float(node: Node, t):
    if isinstance(node, Num):
        return float(node.value)
    if isinstance(node, Var):
        return t
    if isinstance(node, Neg):
        return -_eval_float(node.arg, t)
    if isinstance(node, BinOp):
        x = _eval_float(node.left, t)
        y = _eval_float(node.right, t)
        if node.op == "+":
            return x + y
        if node.op == "-":
            return x - y
        if node.op == "*":
            return x * y
        if np.any(y == 0):
            raise DomainError("division by zero")
        return x / y
    if isinstance(node, Pow):
        x = _eval_float(node.base, t)
        if node.exp < 0 and np.any(x == 0):
            raise DomainError("zero raised to a negative power")
        return x ** float(node.exp) if node.exp < 0 else x**node.exp
    if isinstance(node, Call):
        x = _eval_float(node.arg, t)
        if node.name == "log":
            if np.any(x <= 0):
                raise DomainError("log of a non-positive number")
            return np.log(x)
        if node.name == "sqrt":
            if np.any(x < 0):
                raise DomainError("sqrt of a negative number")
            return np.sqrt(x)
        return getattr(np, node.name)(x)
    raise TypeError(f"not an expression node: {node!r}")


def _eval_exact(node: Node, t: Fraction) -> Fraction:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return t
    if isinstance(node, Neg):
        return -_eval_exact(node.arg, t)
    if isinstance(node, BinOp):
        x = _eval_exact(node.left, t)
        y = _eval_exact(node.right, t)
        if node.op == "+":
            return x + y
        if node.op == "-":
            return x - y
        if node.op == "*":
            return x * y
        if y == 0:
            raise DomainError("division by zero")
        return x / y
    if isinstance(node, Pow):
        x = _eval_exact(node.base, t)
        if node.exp < 0 and x == 0:
            raise DomainError("zero raised to a negative power")
        return x**node.exp
    raise TypeError("transcendental expressions have no exact value")


# -- differentiation --------------------------------------------------------

def _diff(node: Node) -> Node:
    if isinstance(node, Num):
        return ZERO
    if isinstance(node, Var):
        return ONE
    if isinstance(node, Neg):
        return neg(_diff(node.arg))
    if isinstance(node, BinOp):
        u, v = node.left, node.right
        du, dv = _diff(u), _diff(v)
        if node.op == "+":
            return add(du, dv)
        if node.op == "-":
            return sub(du, dv)
        if node.op == "*":
            return add(mul(du, v), mul(u, dv))
        return div(sub(mul(du, v), mul(u, dv)), power(v, 2))
    if isinstance(node, Pow):
        n = node.exp
        if n == 0:
            return ZERO
        return mul(mul(num(n), power(node.base, n - 1)), _diff(node.base))
    if isinstance(node, Call):
        u = node.arg
        du = _diff(u)
        if node.name == "sin":
            return mul(Call("cos", u), du)
        if node.name == "cos":
            return mul(neg(Call("sin", u)), du)
        if node.name == "exp":
            return mul(node, du)
        if node.name == "log":
            return div(du, u)
        if node.name == "sqrt":
            return div(du, mul(num(2), node))
    raise NotDifferentiable(f"cannot differentiate {node!r}")


# -- polynomial view --------------------------------------------------------

def _padd(p, q):
    n = max(len(p), len(q))
    return [(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)]


def _pmul(p, q):
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def _poly(node: Node):
    """Coefficients (lowest degree first) if ``node`` is a polynomial in t, else None."""
    if isinstance(node, Num):
        return [node.value]
    if isinstance(node, Var):
        return [Fraction(0), Fraction(1)]
    if isinstance(node, Neg):
        p = _poly(node.arg)
        return None if p is None else [-c for c in p]
    if isinstance(node, BinOp):
        p, q = _poly(node.left), _poly(node.right)
        if p is None or q is None:
            return None
        if node.op == "+":
            return _padd(p, q)
        if node.op == "-":
            return _padd(p, [-c for c in q])
        if node.op == "*":
            return _pmul(p, q)
        q = _trim(q)
        if len(q) != 1 or q[0] == 0:
            return None
        return [c / q[0] for c in p]
    if isinstance(node, Pow):
        p = _poly(node.base)
        if p is None or node.exp < 0:
            return None
        out = [Fraction(1)]
        for _ in range(node.exp):
            out = _pmul(out, p)
        return out
    return None


def _trim(p):
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p


def _guards(node: Node, out: list):
    """Collect (subexpression, strict_positive) pairs whose sign must not vanish."""
    if isinstance(node, Neg):
        _guards(node.arg, out)
    elif isinstance(node, BinOp):
        _guards(node.left, out)
        _guards(node.right, out)
        if node.op == "/":
            out.append((node.right, False))
    elif isinstance(node, Pow):
        _guards(node.base, out)
        if node.exp < 0:
            out.append((node.base, False))
    elif isinstance(node, Call):
        _guards(node.arg, out)
        if node.name in ("log", "sqrt"):
            out.append((node.arg, True))
    return out


@dataclass(frozen=True)
class ExprFunc:
    tree: Node

    def __call__(self, t):
        """Float evaluation; ``t`` may be a scalar or a numpy array."""
        with np.errstate(all="ignore"):
            out = _eval_float(self.tree, t)
        if np.isscalar(t) or np.ndim(t) == 0:
            return float(out)
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(t)).copy()

    def exact(self, t) -> Fraction:
        """Exact rational value; only for trees where ``is_rational`` holds."""
        return _eval_exact(self.tree, Fraction(t))

    def value(self, t):
        """Exact value when possible, float otherwise."""
        if self.is_rational:
            return self.exact(t)
        return self(float(t))

    @cached_property
    def is_rational(self) -> bool:
        def walk(n):
            if isinstance(n, Call):
                return False
            if isinstance(n, Neg):
                return walk(n.arg)
            if isinstance(n, BinOp):
                return walk(n.left) and walk(n.right)
            if isinstance(n, Pow):
                return walk(n.base)
            return True

        return walk(self.tree)

    @cached_property
    def is_safe(self) -> bool:
        """True when the tree has no division, log, sqrt or negative power."""
        return not _guards(self.tree, [])

    @cached_property
    def derivative(self) -> "ExprFunc":
        return ExprFunc(_diff(self.tree))

    @cached_property
    def coefficients(self) -> list[Fraction] | None:
        p = _poly(self.tree)
        return None if p is None else _trim(p)

    @property
    def is_polynomial(self) -> bool:
        return self.coefficients is not None

    def smooth_on(self, lo: float, hi: float, samples: int = 2049) -> bool:
        """Whether ``f`` is smooth on ``[lo, hi]``.

        Safe trees always are.  Otherwise every denominator must keep a
        strict sign, and every log/sqrt argument must stay positive.
        Polynomial guards are checked through their real roots; others on a
        sample grid, which is a heuristic, not a proof.
        """
        if self.is_safe:
            return True
        grid = np.linspace(lo, hi, samples)
        for guard, positive in _guards(self.tree, []):
            g = ExprFunc(guard)
            try:
                vals = g(grid)
            except DomainError:
                return False
            if not np.all(np.isfinite(vals)):
                return False
            if positive and not np.all(vals > 0):
                return False
            if not (np.all(vals > 0) or np.all(vals < 0)):
                return False
            coeffs = g.coefficients
            if coeffs is not None and len(coeffs) > 1:
                roots = np.roots([float(c) for c in reversed(coeffs)])
                real = roots[np.abs(roots.imag) < 1e-12].real
                if np.any((real >= lo) & (real <= hi)):
                    return False
        return True

    @property
    def text(self) -> str:
        return to_text(self.tree)

    def __str__(self) -> str:
        return self.text


def parse_expr(text: str) -> ExprFunc:
    if not isinstance(text, str):
        raise ExprSyntaxError("expression must be a string")
    if not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return ExprFunc(_Parser(text).parse())


def eval_expr(f: ExprFunc, t):
    return f(t)


def diff_expr(f: ExprFunc) -> ExprFunc:
    return f.derivative


def polynomial(coeffs) -> ExprFunc:
    """Build ``Σ c_j t^j`` from coefficients (lowest degree first), kept exact."""
    node: Node = ZERO
    for j, c in enumerate(coeffs):
        c = Fraction(c)
        if c == 0:
            continue
        term = mul(Num(c), power(T, j))
        node = term if node == ZERO else BinOp("+", node, term)
    return ExprFunc(node)
