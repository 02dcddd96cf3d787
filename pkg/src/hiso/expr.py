"""Tiny expression language for test functions.

Grammar (``^`` binds tighter than unary minus and is right-associative):

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | 'pi' | 'rho' | 'theta' | FUNC '(' expr ')' | '(' expr ')'
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from math import pi

import numpy as np

from .errors import DomainError, ParseError
from .functions import PolarPair, RadialFunction, RadialPair

FUNCTIONS = ("sqrt", "sin", "cos", "asin", "exp", "log", "abs")
VARIABLES = ("rho", "theta")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class Bin:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"


Node = Num | Var | Const | Neg | Bin | Call

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(.))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        start = m.start(m.lastindex) if m.lastindex else pos
        if m.group(1):
            out.append(("num", m.group(1), start))
        elif m.group(2):
            out.append(("name", m.group(2), start))
        elif m.group(3):
            if m.group(3) not in "+-*/^()":
                raise ParseError(text, start, f"unexpected character {m.group(3)!r}")
            out.append(("op", m.group(3), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, variables: tuple[str, ...]):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = variables

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, reason: str, tok=None):
        tok = tok or self.peek()
        raise ParseError(self.text, tok[2], reason)

    def expect(self, value: str):
        tok = self.peek()
        if tok[1] != value or tok[0] != "op":
            self.fail(f"expected {value!r}")
        self.take()

    def parse(self) -> Node:
        if self.peek()[0] == "end":
            self.fail("empty expression")
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail("unexpected token")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = Bin(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = Bin(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek() == ("op", "-", self.peek()[2]):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return Bin("^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, value, pos = self.peek()
        if kind == "num":
            self.take()
            return Num(float(value))
        if kind == "name":
            self.take()
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(value, arg)
            if value == "pi":
                return Const("pi")
            if value in self.variables:
                return Var(value)
            if value in VARIABLES:
                raise ParseError(self.text, pos, f"variable {value!r} is not available here")
            raise ParseError(self.text, pos, f"unknown name {value!r}")
        if kind == "op" and value == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        self.fail("expected a number, variable, function or '('")


def parse(text: str, variables: tuple[str, ...] = VARIABLES) -> Node:
    return _Parser(text, variables).parse()


# ---------------------------------------------------------------- printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _num(v: float) -> str:
    return str(int(v)) if v == int(v) and abs(v) < 1e15 else repr(v)


def to_string(node: Node) -> str:
    return _show(node, 0)


def _show(node: Node, ctx: int) -> str:
    if isinstance(node, Num):
        s = _num(node.value)
        return f"({s})" if node.value < 0 and ctx > 1 else s
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Call):
        return f"{node.fn}({_show(node.arg, 0)})"
    if isinstance(node, Neg):
        inner = _show(node.arg, _PREC["neg"])
        # negations inside products and powers are parenthesized for readability
        return f"(-{inner})" if ctx > 1 else f"-{inner}"
    p = _PREC[node.op]
    if node.op == "^":
        left = _show(node.left, p + 1)
        right = _show(node.right, _PREC["neg"])
    else:
        left = _show(node.left, p)
        right = _show(node.right, p + 1)
    s = f"{left} {node.op} {right}" if p == 1 else f"{left}{node.op}{right}"
    return f"({s})" if p < ctx else s


# ---------------------------------------------------------------- evaluation

_NUMPY = {"sqrt": np.sqrt, "sin": np.sin, "cos": np.cos, "asin": np.arcsin, "exp": np.exp,
          "log": np.log, "abs": np.abs}


def evaluate(node: Node, **env) -> np.ndarray:
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Const):
        return np.float64(pi)
    if isinstance(node, Var):
        if node.name not in env:
            raise DomainError(f"no value for variable {node.name!r}")
        return np.asarray(env[node.name], dtype=float)
    if isinstance(node, Neg):
        return -evaluate(node.arg, **env)
    if isinstance(node, Call):
        return _NUMPY[node.fn](evaluate(node.arg, **env))
    a, b = evaluate(node.left, **env), evaluate(node.right, **env)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        return a / b
    return np.power(a, b)


# ---------------------------------------------------------------- differentiation

ZERO, ONE, TWO = Num(0.0), Num(1.0), Num(2.0)


def _is(node: Node, v: float) -> bool:
    return _const(node) == v


def _const(node: Node) -> float | None:
    """Value of a literal or a negated literal, else None."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Neg) and isinstance(node.arg, Num):
        return -node.arg.value
    return None


def _add(a, b):
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    if _const(a) is not None and _const(b) is not None:
        return Num(_const(a) + _const(b))
    return Bin("+", a, b)


def _sub(a, b):
    if _is(b, 0):
        return a
    if _is(a, 0):
        return _neg(b)
    if _const(a) is not None and _const(b) is not None:
        return Num(_const(a) - _const(b))
    return Bin("-", a, b)


def _neg(a):
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _mul(a, b):
    if _is(a, 0) or _is(b, 0):
        return ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    if _const(a) is not None and _const(b) is not None:
        return Num(_const(a) * _const(b))
    return Bin("*", a, b)


def _div(a, b):
    if _is(a, 0):
        return ZERO
    if _is(b, 1):
        return a
    return Bin("/", a, b)


def _pow(a, b):
    if _is(b, 1):
        return a
    if _is(b, 0):
        return ONE
    return Bin("^", a, b)


def _depends(node: Node, var: str) -> bool:
    if isinstance(node, Var):
        return node.name == var
    if isinstance(node, (Num, Const)):
        return False
    if isinstance(node, (Neg, Call)):
        return _depends(node.arg, var)
    return _depends(node.left, var) or _depends(node.right, var)


def derivative(node: Node, var: str = "rho") -> Node:
    """Symbolic derivative with light constant folding."""
    if not _depends(node, var):
        return ZERO
    if isinstance(node, Var):
        return ONE
    if isinstance(node, Neg):
        return _neg(derivative(node.arg, var))
    if isinstance(node, Call):
        u = node.arg
        du = derivative(u, var)
        outer = {
            "sqrt": lambda: _div(ONE, _mul(TWO, Call("sqrt", u))),
            "sin": lambda: Call("cos", u),
            "cos": lambda: _neg(Call("sin", u)),
            "asin": lambda: _div(ONE, Call("sqrt", _sub(ONE, _pow(u, TWO)))),
            "exp": lambda: Call("exp", u),
            "log": lambda: _div(ONE, u),
            "abs": lambda: _div(u, Call("abs", u)),
        }[node.fn]()
        return _mul(outer, du)
    a, b = node.left, node.right
    da, db = derivative(a, var), derivative(b, var)
    if node.op == "+":
        return _add(da, db)
    if node.op == "-":
        return _sub(da, db)
    if node.op == "*":
        return _add(_mul(da, b), _mul(a, db))
    if node.op == "/":
        return _div(_sub(_mul(da, b), _mul(a, db)), _pow(b, TWO))
    if not _depends(b, var):
        return _mul(_mul(b, _pow(a, _sub(b, ONE))), da)
    # a^b = exp(b log a)
    return _mul(node, _add(_mul(db, Call("log", a)), _div(_mul(b, da), a)))


# ---------------------------------------------------------------- test functions

def radial_function(text: str) -> RadialFunction:
    """Radial function of rho with symbolic first and second derivatives."""
    node = parse(text, ("rho",))
    d1 = derivative(node, "rho")
    d2 = derivative(d1, "rho")

    def wrap(n):
        return lambda r: np.broadcast_to(evaluate(n, rho=r), np.shape(r)).astype(float)

    return RadialFunction(wrap(node), wrap(d1), wrap(d2), None, to_string(node))


def polar_pair(text: str, parity: str = "even") -> PolarPair:
    """n = 1 field of (rho, theta); the lower hemisphere is +-phi by parity."""
    node = parse(text, VARIABLES)
    dr, dt = derivative(node, "rho"), derivative(node, "theta")
    sign = _parity_sign(parity)

    def ev(n, r, t, c=1.0):
        return c * np.broadcast_to(evaluate(n, rho=r, theta=t), np.broadcast_shapes(np.shape(r), np.shape(t)))

    return PolarPair(lambda r, t: ev(node, r, t), lambda r, t: ev(node, r, t, sign), to_string(node),
                     plus_d=lambda r, t: (ev(dr, r, t), ev(dt, r, t)),
                     minus_d=lambda r, t: (ev(dr, r, t, sign), ev(dt, r, t, sign)))


def _parity_sign(parity: str) -> float:
    if parity == "even":
        return 1.0
    if parity == "odd":
        return -1.0
    raise DomainError(f"parity must be 'even' or 'odd', got {parity!r}")


def test_function(text: str, parity: str = "even", n: int = 2) -> RadialPair | PolarPair:
    """Parse a test function; expressions in theta are allowed for n = 1 only."""
    node = parse(text, VARIABLES if n == 1 else ("rho",))
    if _depends(node, "theta"):
        return polar_pair(text, parity)
    f = radial_function(text)
    return RadialPair.even(f) if _parity_sign(parity) > 0 else RadialPair.odd(f)
