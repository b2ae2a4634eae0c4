"""A small arithmetic expression language for scenario files.

Grammar: numbers, the variables u, x, y, p, s, unary minus, the binary
operators + - * / ^ (with ^ right associative and binding tighter than
unary minus, so -x^2 means -(x^2)), parentheses, and single-argument calls
of sin, cos, tan, tanh, exp, log, sqrt, abs.  Parse errors carry the byte
offset and the set of acceptable tokens; evaluation domain errors carry the
source span of the offending node.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import ExpressionDomainError, ExpressionSyntaxError

FUNCTIONS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "tanh": np.tanh,
    "exp": np.exp, "log": np.log, "sqrt": np.sqrt, "abs": np.abs,
}
VARIABLES = ("u", "x", "y", "p", "s")

_BINARY_BP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_BP = 30  # between * and ^


@dataclass(frozen=True)
class Num:
    value: float
    span: Tuple[int, int]


@dataclass(frozen=True)
class Var:
    name: str
    span: Tuple[int, int]


@dataclass(frozen=True)
class Neg:
    arg: object
    span: Tuple[int, int]


@dataclass(frozen=True)
class BinOp:
    op: str
    lhs: object
    rhs: object
    span: Tuple[int, int]


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object
    span: Tuple[int, int]


def _same_tree(a, b) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Num):
        return a.value == b.value
    if isinstance(a, Var):
        return a.name == b.name
    if isinstance(a, Neg):
        return _same_tree(a.arg, b.arg)
    if isinstance(a, BinOp):
        return a.op == b.op and _same_tree(a.lhs, b.lhs) and _same_tree(a.rhs, b.rhs)
    if isinstance(a, Call):
        return a.fn == b.fn and _same_tree(a.arg, b.arg)
    return False


# ---------------------------------------------------------------------------
# tokenizer
# ---------------------------------------------------------------------------

_OPS = "+-*/^(),"


def _tokenize(src: str):
    tokens = []
    i = 0
    n = len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            while j < n and (src[j].isdigit() or src[j] == "."):
                j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
            text = src[i:j]
            try:
                value = float(text)
            except ValueError:
                raise ExpressionSyntaxError("bad number literal %r" % text, i, ("number",))
            tokens.append(("num", value, i, j))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(("name", src[i:j], i, j))
            i = j
            continue
        if c in _OPS:
            tokens.append(("op", c, i, i + 1))
            i += 1
            continue
        raise ExpressionSyntaxError("unexpected character %r" % c, i,
                                    ("number", "name", "operator"))
    tokens.append(("end", "", n, n))
    return tokens


# ---------------------------------------------------------------------------
# parser (precedence climbing)
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, expected):
        kind, text, start, _ = self.peek()
        what = "end of input" if kind == "end" else repr(text)
        raise ExpressionSyntaxError(
            "unexpected %s; expected one of: %s" % (what, ", ".join(sorted(expected))),
            start, expected)

    def parse(self):
        node = self.expression(0)
        if self.peek()[0] != "end":
            self.fail(("operator", "end"))
        return node

    def expression(self, min_bp: int):
        node = self.prefix()
        while True:
            kind, text, start, end = self.peek()
            if kind != "op" or text not in _BINARY_BP:
                break
            bp = _BINARY_BP[text]
            if bp <= min_bp:
                break
            self.advance()
            # right associativity for ^: allow equal binding power on the right
            rhs = self.expression(bp - 1 if text == "^" else bp)
            node = BinOp(text, node, rhs, (node.span[0], rhs.span[1]))
        return node

    def prefix(self):
        kind, text, start, end = self.advance()
        if kind == "num":
            return Num(text, (start, end))
        if kind == "name":
            if self.peek()[:2] == ("op", "("):
                if text not in FUNCTIONS:
                    raise ExpressionSyntaxError(
                        "unknown function %r; expected one of: %s" % (text, ", ".join(sorted(FUNCTIONS))),
                        start, tuple(sorted(FUNCTIONS)))
                self.advance()
                arg = self.expression(0)
                if self.peek()[:2] != ("op", ")"):
                    self.fail((")",))
                _, _, _, close = self.advance()
                return Call(text, arg, (start, close))
            if text not in VARIABLES:
                raise ExpressionSyntaxError(
                    "unknown variable %r; expected one of: %s" % (text, ", ".join(VARIABLES)),
                    start, VARIABLES)
            return Var(text, (start, end))
        if (kind, text) == ("op", "-"):
            arg = self.expression(_UNARY_BP)
            return Neg(arg, (start, arg.span[1]))
        if (kind, text) == ("op", "("):
            node = self.expression(0)
            if self.peek()[:2] != ("op", ")"):
                self.fail((")",))
            self.advance()
            return node
        self.pos -= 1
        self.fail(("number", "variable", "function", "'('", "'-'"))


# ---------------------------------------------------------------------------
# evaluation and printing
# ---------------------------------------------------------------------------

def _eval_node(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if node.name not in env:
            raise ExpressionDomainError("unbound variable %r" % node.name, node.span)
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval_node(node.arg, env)
    if isinstance(node, BinOp):
        a = _eval_node(node.lhs, env)
        b = _eval_node(node.rhs, env)
        with np.errstate(all="ignore"):
            if node.op == "+":
                out = a + b
            elif node.op == "-":
                out = a - b
            elif node.op == "*":
                out = a * b
            elif node.op == "/":
                out = np.divide(a, b)
            else:
                out = np.power(a, b)
        if not np.all(np.isfinite(out)):
            raise ExpressionDomainError("operator %r left its domain" % node.op, node.span)
        return out
    if isinstance(node, Call):
        a = _eval_node(node.arg, env)
        with np.errstate(all="ignore"):
            out = FUNCTIONS[node.fn](a)
        if not np.all(np.isfinite(out)):
            raise ExpressionDomainError("%s() left its domain" % node.fn, node.span)
        return out
    raise TypeError("not an expression node: %r" % (node,))


def _print_node(node, parent_bp: int = 0) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        text = "-" + _print_node(node.arg, _UNARY_BP)
        return "(" + text + ")" if parent_bp >= _UNARY_BP else text
    if isinstance(node, Call):
        return "%s(%s)" % (node.fn, _print_node(node.arg, 0))
    if isinstance(node, BinOp):
        bp = _BINARY_BP[node.op]
        if node.op == "^":
            lhs = _print_node(node.lhs, bp)
            rhs = _print_node(node.rhs, bp - 1)
        else:
            lhs = _print_node(node.lhs, bp - 1)
            rhs = _print_node(node.rhs, bp)
        text = "%s %s %s" % (lhs, node.op, rhs)
        return "(" + text + ")" if bp <= parent_bp else text
    raise TypeError("not an expression node: %r" % (node,))


class Expression:
    """A parsed expression: evaluable, printable, and stable under the
    round trip parse(print(parse(src)))."""

    def __init__(self, source: str):
        self.source = source
        self.root = _Parser(source).parse()
        names = set()

        def walk(n):
            if isinstance(n, Var):
                names.add(n.name)
            elif isinstance(n, Neg):
                walk(n.arg)
            elif isinstance(n, BinOp):
                walk(n.lhs)
                walk(n.rhs)
            elif isinstance(n, Call):
                walk(n.arg)

        walk(self.root)
        self.variables = frozenset(names)

    def __call__(self, **env):
        return _eval_node(self.root, env)

    def eval(self, **env) -> float:
        return float(_eval_node(self.root, env))

    def to_source(self) -> str:
        return _print_node(self.root)

    def same_tree(self, other: "Expression") -> bool:
        return _same_tree(self.root, other.root)

    def as_function(self, *names):
        """A positional callable over the named variables, safe on arrays."""
        missing = self.variables - set(names)
        if missing:
            raise ExpressionDomainError(
                "expression uses %s, not among %s" % (sorted(missing), list(names)),
                self.root.span)

        def fn(*args):
            env = dict(zip(names, args))
            return _eval_node(self.root, env)

        fn.__name__ = "expr"
        return fn

    def __repr__(self):
        return "Expression(%r)" % self.source


def parse_expression(src: str) -> Expression:
    """Parse an expression; raises ExpressionSyntaxError with byte offsets."""
    return Expression(src)
