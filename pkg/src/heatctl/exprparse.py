"""Small expression language for coefficient functions of x (and t).

Grammar, loosest to tightest binding::

    expr   := term (('+' | '-') term)*
    term   := power (('*' | '/') power)*
    power  := unary ('^' power)?          right-associative
    unary  := ('-' | '+') unary | atom    so -x^2 means (-x)^2
    atom   := number | name | name '(' expr ')' | '(' expr ')'

Functions: exp ln cosh sinh tanh sqrt abs sgn. Names: x, t, pi.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, HeatCtlError

FUNCTIONS = ("exp", "ln", "cosh", "sinh", "tanh", "sqrt", "abs", "sgn")
VARIABLES = ("x", "t")
CONSTANTS = {"pi": np.pi}

_BINARY = {"+": (1, "left"), "-": (1, "left"), "*": (2, "left"), "/": (2, "left"),
           "^": (3, "right")}
_ATOM_START = frozenset({"number", "name", "'('", "'-'", "'+'"})

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)


class ParseError(HeatCtlError, ValueError):
    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = tuple(sorted(expected))
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")


@dataclass(frozen=True)
class Num:
    value: float
    pos: int = 0


@dataclass(frozen=True)
class Var:
    name: str
    pos: int = 0


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Node"
    pos: int = 0


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"
    pos: int = 0


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"
    pos: int = 0


Node = Union[Num, Var, Unary, Binary, Call]


def _tokenize(src: str):
    toks = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append((kind, m.group(), pos))
        pos = m.end()
    toks.append(("end", "", len(src)))
    return toks


class _Parser:
    def __init__(self, src: str):
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, val, pos = self.peek()
        if val != text or kind == "number":
            raise ParseError(f"expected {text!r}", pos, {f"'{text}'"})
        return self.take()

    def expr(self, min_prec=1):
        lhs = self.unary()
        while True:
            kind, val, pos = self.peek()
            if kind != "op" or val not in _BINARY:
                return lhs
            prec, assoc = _BINARY[val]
            if prec < min_prec:
                return lhs
            self.take()
            rhs = self.expr(prec if assoc == "right" else prec + 1)
            lhs = Binary(val, lhs, rhs, pos)

    def unary(self):
        kind, val, pos = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            arg = self.unary()
            return arg if val == "+" else Unary("neg", arg, pos)
        return self.atom()

    def atom(self):
        kind, val, pos = self.take()
        if kind == "number":
            return Num(float(val), pos)
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg, pos)
            if val in VARIABLES:
                return Var(val, pos)
            if val in CONSTANTS:
                return Num(CONSTANTS[val], pos)
            raise ParseError(f"unknown name {val!r}", pos)
        if val == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        what = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {what}", pos, _ATOM_START)


def parse(src: str) -> Node:
    """Parse ``src`` into an immutable AST; raises ParseError with the byte
    offset of the offending token."""
    p = _Parser(src)
    node = p.expr()
    kind, val, pos = p.peek()
    if kind != "end":
        raise ParseError(f"unexpected {val!r}", pos, {"operator", "end of input"})
    return node


def _domain(msg, node):
    return DomainError(f"{msg} (expression offset {node.pos})")


def evaluate(node: Node, x=0.0, t=0.0):
    """Evaluate over scalar or array ``x`` (and ``t``) in IEEE doubles."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    with np.errstate(all="ignore"):
        out = _eval(node, x, t)
    out = np.broadcast_to(out, np.broadcast(x, t).shape).astype(float)
    return float(out) if out.ndim == 0 else out.copy()


eval = evaluate  # noqa: A001  public name mirrors the operation


def _eval(node, x, t):
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Var):
        return x if node.name == "x" else t
    if isinstance(node, Unary):
        return -_eval(node.arg, x, t)
    if isinstance(node, Binary):
        a = _eval(node.left, x, t)
        b = _eval(node.right, x, t)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if np.any(b == 0):
                raise _domain("division by zero", node)
            return a / b
        res = np.power(a, b)
        if np.any(np.isnan(res) & ~np.isnan(a) & ~np.isnan(b)):
            raise _domain("non-real power", node)
        return res
    v = _eval(node.arg, x, t)
    fn = node.fn
    if fn == "ln":
        if np.any(v <= 0):
            raise _domain("ln of a nonpositive value", node)
        return np.log(v)
    if fn == "sqrt":
        if np.any(v < 0):
            raise _domain("sqrt of a negative value", node)
        return np.sqrt(v)
    if fn == "sgn":
        return np.sign(v)
    return {"exp": np.exp, "cosh": np.cosh, "sinh": np.sinh, "tanh": np.tanh,
            "abs": np.abs}[fn](v)


def _num_text(v: float) -> str:
    if v == np.pi:
        return "pi"
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def pretty(node: Node) -> str:
    """Canonical text with the minimal parentheses that preserve the tree."""
    return _pretty(node)


def _prec(node):
    if isinstance(node, Binary):
        return _BINARY[node.op][0]
    if isinstance(node, Unary):
        return 4
    return 5


def _pretty(node):
    if isinstance(node, Num):
        return _num_text(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.fn}({_pretty(node.arg)})"
    if isinstance(node, Unary):
        inner = _pretty(node.arg)
        return "-" + (inner if _prec(node.arg) >= 4 else f"({inner})")
    prec, assoc = _BINARY[node.op]
    left = _pretty(node.left)
    right = _pretty(node.right)
    lp, rp = _prec(node.left), _prec(node.right)
    if node.op == "^":
        # operands of ^ are unary expressions; anything looser needs parens
        if lp < 4:
            left = f"({left})"
        if rp < 3:
            right = f"({right})"
    else:
        if lp < prec:
            left = f"({left})"
        if rp <= prec:
            right = f"({right})"
    return f"{left}{node.op}{right}" if node.op in "*/^" else f"{left} {node.op} {right}"


class CompiledExpr:
    """Callable wrapper used for coefficient functions."""

    def __init__(self, src: str):
        self.src = src
        self.ast = parse(src)

    def __call__(self, x, t=0.0):
        return evaluate(self.ast, x, t)

    def __repr__(self):
        return f"CompiledExpr({pretty(self.ast)!r})"
