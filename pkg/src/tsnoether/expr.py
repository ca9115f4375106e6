"""Scalar arithmetic expressions with exact first derivatives.

Grammar (highest precedence first)::

    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'
    power  := atom ['^' unary]          # right associative
    unary  := '-' unary | power
    term   := unary (('*' | '/') unary)*
    expr   := term (('+' | '-') term)*

Derivatives come from forward-mode dual numbers, so ``partial`` is exact up to
rounding rather than a finite-difference estimate.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Mapping, Union

from .errors import DomainError, ExprSyntaxError, UnknownFunction, UnknownVariable


class Dual:
    """a + b*eps with eps**2 = 0."""

    __slots__ = ("primal", "tangent")

    def __init__(self, primal: float, tangent: float = 0.0):
        self.primal = float(primal)
        self.tangent = float(tangent)

    def __repr__(self):
        return f"Dual({self.primal!r}, {self.tangent!r})"

    def __eq__(self, other):
        if isinstance(other, Dual):
            return self.primal == other.primal and self.tangent == other.tangent
        return NotImplemented

    def __hash__(self):
        return hash((self.primal, self.tangent))

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.primal + other.primal, self.tangent + other.tangent)
        return Dual(self.primal + other, self.tangent)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.primal - other.primal, self.tangent - other.tangent)
        return Dual(self.primal - other, self.tangent)

    def __rsub__(self, other):
        return Dual(other - self.primal, -self.tangent)

    def __neg__(self):
        return Dual(-self.primal, -self.tangent)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.primal * other.primal,
                self.primal * other.tangent + self.tangent * other.primal,
            )
        return Dual(self.primal * other, self.tangent * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return divide(self, other)

    def __rtruediv__(self, other):
        return divide(other, self)

    def __pow__(self, other):
        return power(self, other)

    def __rpow__(self, other):
        return power(other, self)


Number = Union[float, Dual]


def _split(v: Number) -> tuple[float, float]:
    if isinstance(v, Dual):
        return v.primal, v.tangent
    return float(v), 0.0


def _make(primal: float, tangent: float, dual: bool) -> Number:
    return Dual(primal, tangent) if dual else primal


def divide(a: Number, b: Number) -> Number:
    ap, at = _split(a)
    bp, bt = _split(b)
    if bp == 0.0:
        raise DomainError("division by zero")
    q = ap / bp
    return _make(q, (at - q * bt) / bp, isinstance(a, Dual) or isinstance(b, Dual))


def power(base: Number, exponent: Number) -> Number:
    bp, bt = _split(base)
    ep, et = _split(exponent)
    dual = isinstance(base, Dual) or isinstance(exponent, Dual)
    integral = float(ep).is_integer()
    if bp == 0.0 and ep < 0:
        raise DomainError("zero raised to a negative power")
    if bp < 0.0 and not integral:
        raise DomainError(f"negative base {bp} with non-integer exponent {ep}")
    try:
        val = bp**ep
    except OverflowError:
        raise DomainError(f"overflow in {bp}^{ep}") from None
    if not dual:
        return val
    d = 0.0
    if bt != 0.0 and ep != 0.0:
        if bp == 0.0 and ep < 1.0:
            raise DomainError("derivative of x^p undefined at x = 0 for p < 1")
        d += ep * bp ** (ep - 1.0) * bt
    if et != 0.0:
        if bp > 0.0:
            d += val * math.log(bp) * et
        elif not (bp == 0.0 and ep > 0.0):
            raise DomainError("derivative in the exponent needs a positive base")
    return Dual(val, d)


def _unary(f: Callable[[float], float], df: Callable[[float], float], name: str):
    def apply(v: Number) -> Number:
        p, t = _split(v)
        try:
            val = f(p)
        except (ValueError, OverflowError):
            raise DomainError(f"{name}({p}) is undefined") from None
        if not isinstance(v, Dual):
            return val
        return Dual(val, df(p) * t if t != 0.0 else 0.0)

    apply.__name__ = name
    return apply


def _log(p: float) -> float:
    if p <= 0.0:
        raise ValueError
    return math.log(p)


def _sqrt_d(p: float) -> float:
    if p == 0.0:
        raise DomainError("derivative of sqrt undefined at 0")
    return 0.5 / math.sqrt(p)


# abs uses sign(0) = 0 as its derivative at the kink
FUNCTIONS: dict[str, Callable[[Number], Number]] = {
    "sin": _unary(math.sin, math.cos, "sin"),
    "cos": _unary(math.cos, lambda p: -math.sin(p), "cos"),
    "exp": _unary(math.exp, math.exp, "exp"),
    "log": _unary(_log, lambda p: 1.0 / p, "log"),
    "sqrt": _unary(math.sqrt, _sqrt_d, "sqrt"),
    "abs": _unary(abs, lambda p: math.copysign(1.0, p) if p != 0.0 else 0.0, "abs"),
}


# --------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
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
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Call]

_BINARY = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": divide,
    "^": power,
}


def _compile(node: Node) -> Callable[[Mapping[str, Number]], Number]:
    if isinstance(node, Num):
        v = node.value
        return lambda env: v
    if isinstance(node, Var):
        name = node.name

        def lookup(env):
            try:
                return env[name]
            except KeyError:
                raise UnknownVariable(f"variable {name!r} is not bound") from None

        return lookup
    if isinstance(node, Neg):
        f = _compile(node.operand)
        return lambda env: -f(env)
    if isinstance(node, BinOp):
        op, lf, rf = _BINARY[node.op], _compile(node.left), _compile(node.right)
        return lambda env: op(lf(env), rf(env))
    if isinstance(node, Call):
        fn, af = FUNCTIONS[node.func], _compile(node.arg)
        return lambda env: fn(af(env))
    raise TypeError(f"not an expression node: {node!r}")


def _variables(node: Node, out: set):
    if isinstance(node, Var):
        out.add(node.name)
    elif isinstance(node, Neg):
        _variables(node.operand, out)
    elif isinstance(node, BinOp):
        _variables(node.left, out)
        _variables(node.right, out)
    elif isinstance(node, Call):
        _variables(node.arg, out)


def _rename(node: Node, mapping: Mapping[str, str]) -> Node:
    if isinstance(node, Var):
        return Var(mapping.get(node.name, node.name))
    if isinstance(node, Neg):
        return Neg(_rename(node.operand, mapping))
    if isinstance(node, BinOp):
        return BinOp(node.op, _rename(node.left, mapping), _rename(node.right, mapping))
    if isinstance(node, Call):
        return Call(node.func, _rename(node.arg, mapping))
    return node


# printing precedences: + - : 1, * / : 2, unary - : 3, ^ : 4, atoms : 5
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _fmt_num(v: float) -> str:
    a = abs(float(v))
    s = str(int(a)) if a.is_integer() and a < 1e15 else repr(a)
    return s if v >= 0 else "-" + s


def _pretty(node: Node, min_prec: int = 0) -> str:
    if isinstance(node, Num):
        s, prec = _fmt_num(node.value), (5 if node.value >= 0 else 3)
    elif isinstance(node, Var):
        s, prec = node.name, 5
    elif isinstance(node, Call):
        s, prec = f"{node.func}({_pretty(node.arg)})", 5
    elif isinstance(node, Neg):
        s, prec = "-" + _pretty(node.operand, 3), 3
    else:
        prec = _PREC[node.op]
        if node.op == "^":
            s = f"{_pretty(node.left, 5)}^{_pretty(node.right, 3)}"
        else:
            s = f"{_pretty(node.left, prec)} {node.op} {_pretty(node.right, prec + 1)}"
    return f"({s})" if prec < min_prec else s


# --------------------------------------------------------------------------
# parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks, pos = [], 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            off = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[off]!r}", off)
        kind = m.lastgroup
        toks.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val, off = self.peek()
        if kind != "op" or val != op:
            raise ExprSyntaxError(f"expected {op!r}, found {val or 'end of input'!r}", off, [op])
        self.take()

    def parse(self) -> Node:
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", off, ["operator", "end of input"])
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if self.peek()[:2] == ("op", "("):
                if val not in FUNCTIONS:
                    raise UnknownFunction(f"unknown function {val!r} at offset {off}")
                self.take()
                arg = self.expr()
                self.expect_op(")")
                return Call(val, arg)
            return Var(val)
        if (kind, val) == ("op", "("):
            node = self.expr()
            self.expect_op(")")
            return node
        found = val or "end of input"
        raise ExprSyntaxError(f"unexpected {found!r}", off, ["number", "name", "'('", "'-'"])


@dataclass(frozen=True)
class Expr:
    """A parsed expression; immutable and safe to evaluate from many threads."""

    root: Node

    @cached_property
    def _fn(self):
        return _compile(self.root)

    @property
    def variables(self) -> frozenset:
        out: set = set()
        _variables(self.root, out)
        return frozenset(out)

    def eval(self, env: Mapping[str, Number]) -> Number:
        return self._fn(env)

    def __call__(self, **env) -> Number:
        return self._fn(env)

    def partial(self, wrt: str, env: Mapping[str, float]) -> float:
        return partial(self, wrt, env)

    def rename(self, mapping: Mapping[str, str]) -> "Expr":
        return Expr(_rename(self.root, mapping))

    def pretty(self) -> str:
        return _pretty(self.root)

    def __str__(self):
        return self.pretty()


def parse(text: str) -> Expr:
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0, ["number", "name", "'('", "'-'"])
    return Expr(_Parser(text).parse())


def constant(value: float) -> Expr:
    return Expr(Num(float(value)))


def evaluate(e: Expr, env: Mapping[str, float]) -> float:
    val = e.eval(env)
    return val.primal if isinstance(val, Dual) else float(val)


def partial(e: Expr, wrt: str, env: Mapping[str, float]) -> float:
    """d e / d wrt at env, seeding tangent 1 on ``wrt`` and 0 elsewhere."""
    if wrt not in env:
        raise UnknownVariable(f"variable {wrt!r} is not bound")
    seeded = dict(env)
    seeded[wrt] = Dual(env[wrt], 1.0)
    val = e.eval(seeded)
    return val.tangent if isinstance(val, Dual) else 0.0


def value_and_partials(e: Expr, wrt, env: Mapping[str, float]) -> tuple[float, list[float]]:
    """Primal value and the partials with respect to each name in ``wrt``."""
    value = evaluate(e, env)
    return value, [partial(e, w, env) for w in wrt]


def check_variables(e: Expr, allowed) -> None:
    extra = sorted(e.variables - set(allowed))
    if extra:
        raise UnknownVariable(f"undeclared variable(s) {', '.join(extra)} in {e.pretty()!r}")
