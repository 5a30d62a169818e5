"""Field expressions used in configuration files.

Grammar (lowest to highest precedence)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?          # right associative
    primary := NUMBER | VAR | FUNC '(' expr ')' | 'pi' '(' ')' | '(' expr ')'

Variables are ``x, y, t, n``; functions are ``sin, cos, exp, tanh, sqrt``.
Expressions evaluate elementwise on numpy arrays and can be differentiated
symbolically, which is how manufactured forcings are built.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

VARIABLES = ("x", "y", "t", "n")
FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "tanh": np.tanh, "sqrt": np.sqrt}


class ExprError(ValueError):
    """Syntax or semantic error in a field expression; ``pos`` is a 0-based offset."""

    def __init__(self, message: str, pos: int | None = None, text: str | None = None):
        where = "" if pos is None else f" at position {pos}"
        super().__init__(f"{message}{where}")
        self.pos = pos
        self.text = text


# -- AST -------------------------------------------------------------------

class Expr:
    def __add__(self, o): return _add(self, _lift(o))
    def __radd__(self, o): return _add(_lift(o), self)
    def __sub__(self, o): return _sub(self, _lift(o))
    def __rsub__(self, o): return _sub(_lift(o), self)
    def __mul__(self, o): return _mul(self, _lift(o))
    def __rmul__(self, o): return _mul(_lift(o), self)
    def __truediv__(self, o): return _div(self, _lift(o))
    def __neg__(self): return _neg(self)

    def __str__(self) -> str:
        return to_text(self)

    def __call__(self, x=0.0, y=0.0, t=0.0, n=0.0):
        return evaluate(self, {"x": x, "y": y, "t": t, "n": n})


@dataclass(frozen=True, eq=True)
class Num(Expr):
    value: float


@dataclass(frozen=True, eq=True)
class Var(Expr):
    name: str


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True, eq=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Call(Expr):
    func: str
    arg: Expr | None  # None only for pi()


def _lift(o) -> Expr:
    return o if isinstance(o, Expr) else Num(float(o))


# -- parsing ---------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(\S))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # only trailing whitespace left
            break
        num, name, sym = m.groups()
        start = m.start(m.lastindex)
        if num is not None:
            tokens.append(("num", num, start))
        elif name is not None:
            tokens.append(("name", name, start))
        else:
            if sym not in "+-*/^()":
                raise ExprError(f"unexpected character {sym!r}", start, text)
            tokens.append(("op", sym, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, sym: str):
        kind, val, pos = self.take()
        if (kind, val) != ("op", sym):
            found = "end of input" if kind == "end" else repr(val)
            raise ExprError(f"expected {sym!r}, found {found}", pos, self.text)

    def error(self, msg: str):
        raise ExprError(msg, self.peek()[2], self.text)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprError(f"unexpected {val!r}", pos, self.text)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            e = BinOp(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def primary(self) -> Expr:
        kind, val, pos = self.peek()
        if kind == "num":
            self.take()
            return Num(float(val))
        if kind == "name":
            self.take()
            if val in VARIABLES:
                return Var(val)
            if val == "pi":
                self.expect("(")
                self.expect(")")
                return Call("pi", None)
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            raise ExprError(f"unknown identifier {val!r}", pos, self.text)
        if (kind, val) == ("op", "("):
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(val)
        raise ExprError(f"unexpected {found}", pos, self.text)


def parse_field_expression(text: str) -> Expr:
    """Parse ``text`` into an expression tree; raises :class:`ExprError`."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return _Parser(text).parse()


# -- printing --------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _fmt_num(v: float) -> str:
    s = repr(float(v))
    if s in ("inf", "nan", "-inf"):
        raise ExprError(f"cannot print non-finite constant {s}")
    return f"(-{s[1:]})" if s.startswith("-") else s


def to_text(e: Expr) -> str:
    """Canonical text; ``parse_field_expression(to_text(e))`` reproduces ``e``."""
    return _emit(e, 0)


def _emit(e: Expr, ctx: int) -> str:
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return "pi()" if e.func == "pi" else f"{e.func}({_emit(e.arg, 0)})"
    if isinstance(e, Neg):
        s = "-" + _emit(e.arg, 3)
        return f"({s})" if ctx > 3 else s
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        if e.op == "^":
            s = f"{_emit(e.left, p + 1)}^{_emit(e.right, 3)}"
        else:
            s = f"{_emit(e.left, p)}{e.op}{_emit(e.right, p + 1)}"
        return f"({s})" if p < ctx else s
    raise TypeError(f"not an expression node: {e!r}")


# -- evaluation ------------------------------------------------------------

def evaluate(e: Expr, env: dict):
    """Evaluate elementwise; variables absent from ``env`` are an error."""
    with np.errstate(all="ignore"):
        return _eval(e, env)


def _eval(e: Expr, env: dict):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        if e.name not in env:
            raise ExprError(f"variable {e.name!r} has no value")
        return env[e.name]
    if isinstance(e, Neg):
        return -_eval(e.arg, env)
    if isinstance(e, Call):
        if e.func == "pi":
            return math.pi
        return FUNCTIONS[e.func](_eval(e.arg, env))
    if isinstance(e, BinOp):
        a, b = _eval(e.left, env), _eval(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            return np.divide(a, b)
        return np.power(a, b) if isinstance(a, np.ndarray) or isinstance(b, np.ndarray) \
            else float(np.power(float(a), float(b)))
    raise TypeError(f"not an expression node: {e!r}")


def free_variables(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return free_variables(e.arg)
    if isinstance(e, Call):
        return set() if e.arg is None else free_variables(e.arg)
    if isinstance(e, BinOp):
        return free_variables(e.left) | free_variables(e.right)
    return set()


# -- symbolic differentiation ---------------------------------------------

def _is(e: Expr, v: float) -> bool:
    return isinstance(e, Num) and e.value == v


def _add(a: Expr, b: Expr) -> Expr:
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return BinOp("+", a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if _is(b, 0):
        return a
    if _is(a, 0):
        return _neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    return BinOp("-", a, b)


def _mul(a: Expr, b: Expr) -> Expr:
    if _is(a, 0) or _is(b, 0):
        return Num(0.0)
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    return BinOp("*", a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if _is(a, 0):
        return Num(0.0)
    if _is(b, 1):
        return a
    return BinOp("/", a, b)


def _neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _pow(a: Expr, b: Expr) -> Expr:
    if _is(b, 1):
        return a
    if _is(b, 0):
        return Num(1.0)
    return BinOp("^", a, b)


def diff(e: Expr, var: str) -> Expr:
    """Symbolic derivative of ``e`` with respect to ``var``.

    Powers with an exponent depending on ``var`` are rejected, since the
    language has no logarithm to express the result.
    """
    if isinstance(e, Num):
        return Num(0.0)
    if isinstance(e, Var):
        return Num(1.0 if e.name == var else 0.0)
    if isinstance(e, Neg):
        return _neg(diff(e.arg, var))
    if isinstance(e, Call):
        if e.arg is None:
            return Num(0.0)
        a = e.arg
        da = diff(a, var)
        if _is(da, 0):
            return Num(0.0)
        if e.func == "sin":
            outer = Call("cos", a)
        elif e.func == "cos":
            outer = _neg(Call("sin", a))
        elif e.func == "exp":
            outer = e
        elif e.func == "tanh":
            outer = _sub(Num(1.0), _pow(e, Num(2.0)))
        else:  # sqrt
            outer = _div(Num(0.5), e)
        return _mul(outer, da)
    if isinstance(e, BinOp):
        a, b = e.left, e.right
        da, db = diff(a, var), diff(b, var)
        if e.op == "+":
            return _add(da, db)
        if e.op == "-":
            return _sub(da, db)
        if e.op == "*":
            return _add(_mul(da, b), _mul(a, db))
        if e.op == "/":
            return _sub(_div(da, b), _div(_mul(a, db), _pow(b, Num(2.0))))
        if var in free_variables(b):
            raise ExprError(f"cannot differentiate a power whose exponent depends on {var!r}")
        if _is(da, 0):
            return Num(0.0)
        return _mul(_mul(b, _pow(a, _sub(b, Num(1.0)))), da)
    raise TypeError(f"not an expression node: {e!r}")


def compile_field(e: Expr, n: int | float = 0):
    """Callable ``(X, Y, t) -> array`` with the mode index bound to ``n``."""
    def fn(X, Y, t):
        out = evaluate(e, {"x": X, "y": Y, "t": t, "n": float(n)})
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(X))
    fn.expr = e
    return fn
