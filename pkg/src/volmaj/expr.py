"""Tiny arithmetic expression language used by the CLI config files.

Grammar (ASCII only, whitespace insignificant between tokens):

    sum    := term  (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ['^' unary]
    atom   := NUMBER | NAME | NAME '(' sum ')' | '(' sum ')'

'^' is right-associative and binds tighter than unary minus, so
``-t^2`` means ``-(t^2)`` and ``2^3^2`` means ``2^(3^2)``.

Evaluation is strict over the reals: division by zero, log of a
nonpositive value, sqrt of a negative value, fractional powers of
negative bases and any NaN produced mid-expression raise DomainError
instead of propagating quietly.  Magnitude overflow saturates to a
signed infinity, matching IEEE float semantics.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Union

from .errors import DomainError, ExprSyntaxError, UnknownVariableError

__all__ = [
    "Expr",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "FUNCTIONS",
    "parse",
    "evaluate",
    "to_text",
    "variables",
    "as_function",
]

FUNCTIONS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "abs": math.fabs,
}


@dataclass(frozen=True)
class Num:
    value: float
    offset: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    offset: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    offset: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"
    offset: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"
    offset: int = field(default=-1, compare=False)


Expr = Union[Num, Var, Neg, BinOp, Call]

_NUM_RE = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


class _Parser:
    def __init__(self, text: str, allowed: frozenset[str]):
        self.text = text
        self.allowed = allowed
        self.pos = 0

    def fail(self, message: str, offset: int | None = None) -> None:
        raise ExprSyntaxError(message, self.pos if offset is None else offset)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        if self.pos >= len(self.text):
            return ""
        return self.text[self.pos]

    def parse_sum(self) -> Expr:
        node = self.parse_term()
        while True:
            ch = self.peek()
            if ch not in ("+", "-"):
                return node
            at = self.pos
            self.pos += 1
            node = BinOp(ch, node, self.parse_term(), offset=at)

    def parse_term(self) -> Expr:
        node = self.parse_unary()
        while True:
            ch = self.peek()
            if ch not in ("*", "/"):
                return node
            at = self.pos
            self.pos += 1
            node = BinOp(ch, node, self.parse_unary(), offset=at)

    def parse_unary(self) -> Expr:
        if self.peek() == "-":
            at = self.pos
            self.pos += 1
            return Neg(self.parse_unary(), offset=at)
        return self.parse_power()

    def parse_power(self) -> Expr:
        node = self.parse_atom()
        if self.peek() == "^":
            at = self.pos
            self.pos += 1
            node = BinOp("^", node, self.parse_unary(), offset=at)
        return node

    def parse_atom(self) -> Expr:
        ch = self.peek()
        if ch == "":
            self.fail("unexpected end of input")
        at = self.pos
        if ch == "(":
            self.pos += 1
            node = self.parse_sum()
            if self.peek() != ")":
                self.fail("expected ')'")
            self.pos += 1
            return node
        m = _NUM_RE.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            return Num(float(m.group()), offset=at)
        m = _NAME_RE.match(self.text, self.pos)
        if m:
            name = m.group()
            self.pos = m.end()
            if name in FUNCTIONS:
                if self.peek() != "(":
                    self.fail(f"function {name!r} must be followed by '('", at)
                self.pos += 1
                arg = self.parse_sum()
                if self.peek() != ")":
                    self.fail("expected ')'")
                self.pos += 1
                return Call(name, arg, offset=at)
            if name not in self.allowed:
                raise UnknownVariableError(name, at)
            return Var(name, offset=at)
        self.fail(f"unexpected character {ch!r}")
        raise AssertionError("unreachable")


def parse(text: str, allowed_vars: Iterable[str] = ()) -> Expr:
    """Parse expression text into a tree.

    allowed_vars lists the variable names the expression may mention;
    anything else raises UnknownVariableError with its byte offset.
    """
    allowed = frozenset(allowed_vars)
    clash = allowed & FUNCTIONS.keys()
    if clash:
        raise ValueError(f"variable names shadow functions: {sorted(clash)}")
    for i, ch in enumerate(text):
        if ord(ch) > 127:
            raise ExprSyntaxError(
                f"non-ASCII character {ch!r}", len(text[:i].encode("utf-8"))
            )
    p = _Parser(text, allowed)
    node = p.parse_sum()
    if p.peek() != "":
        p.fail(f"unexpected character {p.text[p.pos]!r}")
    return node


def _check_real(v: float, offset: int) -> float:
    if isinstance(v, complex) or math.isnan(v):
        raise DomainError("evaluation produced NaN", offset)
    return v


def evaluate(expr: Expr, env: Mapping[str, float]) -> float:
    """Evaluate with strict real-domain semantics."""
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Var):
        try:
            return float(env[expr.name])
        except KeyError:
            raise UnknownVariableError(expr.name, expr.offset) from None
    if isinstance(expr, Neg):
        return -evaluate(expr.operand, env)
    if isinstance(expr, Call):
        x = evaluate(expr.arg, env)
        try:
            v = FUNCTIONS[expr.func](x)
        except ValueError:
            raise DomainError(
                f"{expr.func}({x!r}) outside real domain", expr.offset
            ) from None
        except OverflowError:
            v = math.inf
        return _check_real(v, expr.offset)
    if isinstance(expr, BinOp):
        a = evaluate(expr.left, env)
        b = evaluate(expr.right, env)
        if expr.op == "+":
            v = a + b
        elif expr.op == "-":
            v = a - b
        elif expr.op == "*":
            v = a * b
        elif expr.op == "/":
            try:
                v = a / b
            except ZeroDivisionError:
                raise DomainError("division by zero", expr.offset) from None
        else:  # ^
            try:
                v = math.pow(a, b)
            except ValueError:
                raise DomainError(
                    f"power {a!r}^{b!r} outside real domain", expr.offset
                ) from None
            except OverflowError:
                # negative base reaches here only with an integer exponent
                neg = a < 0 and float(b) == int(b) and int(b) % 2 == 1
                v = -math.inf if neg else math.inf
        return _check_real(v, expr.offset)
    raise TypeError(f"not an expression node: {expr!r}")


def to_text(expr: Expr) -> str:
    """Render with full parentheses; parse(to_text(e)) equals e."""
    if isinstance(expr, Num):
        return repr(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Neg):
        return f"(-{to_text(expr.operand)})"
    if isinstance(expr, BinOp):
        return f"({to_text(expr.left)} {expr.op} {to_text(expr.right)})"
    if isinstance(expr, Call):
        return f"{expr.func}({to_text(expr.arg)})"
    raise TypeError(f"not an expression node: {expr!r}")


def variables(expr: Expr) -> set[str]:
    if isinstance(expr, Num):
        return set()
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, Neg):
        return variables(expr.operand)
    if isinstance(expr, BinOp):
        return variables(expr.left) | variables(expr.right)
    if isinstance(expr, Call):
        return variables(expr.arg)
    raise TypeError(f"not an expression node: {expr!r}")


def as_function(expr: Expr, names: tuple[str, ...]) -> Callable[..., float]:
    """Bind an expression to positional arguments in the given order."""
    extra = variables(expr) - set(names)
    if extra:
        raise ValueError(f"expression uses unbound variables: {sorted(extra)}")

    def fn(*args: float) -> float:
        return evaluate(expr, dict(zip(names, args)))

    return fn
