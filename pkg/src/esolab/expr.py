"""
Arithmetic expression language for plant dynamics f(x1..xn, t).

Grammar (recursive descent; whitespace insignificant):

    expression := term (('+' | '-') term)*
    term       := factor (('*' | '/') factor)*
    factor     := '-' factor | power
    power      := atom ('^' factor)?
    atom       := NUMBER | 'pi' | 't' | 'x1'..'x9'
                | FUNC '(' expression ')' | '(' expression ')'

Precedence is the usual one: '^' binds tightest and is right-associative
("2^3^2" is 2^(3^2) = 512), then unary minus ("-x^2" is -(x^2)), then
'*' '/', then '+' '-'.  Functions: sin cos tan exp ln abs sign sqrt cbrt.
cbrt is the real signed cube root, so cbrt(-8) = -2.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import EvaluationError, ParseError

FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "abs", "sign", "sqrt", "cbrt")

_VAR_RE = re.compile(r"x[1-9]$")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Name:
    ident: str  # 'pi', 't', or 'x1'..'x9'


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / ^
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


class Expression:
    """A parsed expression; immutable, evaluation is pure."""

    __slots__ = ("root", "_fn")

    def __init__(self, root):
        self.root = root
        self._fn = None

    def __eq__(self, other):
        return isinstance(other, Expression) and self.root == other.root

    def __hash__(self):
        return hash(self.root)

    def __repr__(self):
        return f"Expression({unparse(self)!r})"

    # The compiled closure is a cache, not state: drop it when pickling.
    def __getstate__(self):
        return self.root

    def __setstate__(self, root):
        object.__setattr__(self, "root", root)
        object.__setattr__(self, "_fn", None)

    def __call__(self, t: float, x) -> float:
        fn = self._fn
        if fn is None:
            fn = _compile(self.root)
            object.__setattr__(self, "_fn", fn)
        return fn(t, x)


# ---------------------------------------------------------------------------
# tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            # skip over trailing whitespace before declaring an error
            rest = text[pos:]
            if rest.strip() == "":
                break
            bad = pos + len(rest) - len(rest.lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("name") is not None:
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, text, pos = self.peek()
        if kind == "op" and text == op:
            return self.advance()
        raise ParseError(f"found {text!r}" if text else "unexpected end of input",
                         pos, expected=(repr(op),))

    def parse(self):
        node = self.expression()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"trailing input {text!r}", pos)
        return node

    def expression(self):
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = Binary(text, node, self.term())
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = Binary(text, node, self.factor())
            else:
                return node

    def factor(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            return Binary("^", base, self.factor())
        return base

    def atom(self):
        kind, text, pos = self.advance()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text in FUNCTIONS:
                self.expect_op("(")
                arg = self.expression()
                self.expect_op(")")
                return Call(text, arg)
            if text in ("pi", "t") or _VAR_RE.match(text):
                return Name(text)
            raise ParseError(f"unknown identifier {text!r}", pos)
        if kind == "op" and text == "(":
            node = self.expression()
            self.expect_op(")")
            return node
        raise ParseError(
            f"found {text!r}" if text else "unexpected end of input",
            pos,
            expected=("number", "identifier", "'('", "'-'"),
        )


def parse(text: str) -> Expression:
    """Parse source text into an Expression, or raise ParseError."""
    return Expression(_Parser(text).parse())


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _cbrt(v: float) -> float:
    return math.copysign(abs(v) ** (1.0 / 3.0), v)


def _ln(v: float) -> float:
    if v <= 0.0:
        raise EvaluationError(f"ln of non-positive value {v!r}")
    return math.log(v)


def _sqrt(v: float) -> float:
    if v < 0.0:
        raise EvaluationError(f"sqrt of negative value {v!r}")
    return math.sqrt(v)


def _sign(v: float) -> float:
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


def _exp(v: float) -> float:
    try:
        return math.exp(v)
    except OverflowError as exc:
        raise EvaluationError(f"exp overflow for argument {v!r}") from exc


_FUNC_IMPL = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": _exp,
    "ln": _ln,
    "abs": abs,
    "sign": _sign,
    "sqrt": _sqrt,
    "cbrt": _cbrt,
}


def _compile(node):
    """Build a closure (t, x) -> float for one AST node."""
    if isinstance(node, Num):
        v = node.value
        return lambda t, x: v
    if isinstance(node, Name):
        ident = node.ident
        if ident == "t":
            return lambda t, x: t
        if ident == "pi":
            pi = math.pi
            return lambda t, x: pi
        k = int(ident[1:])

        def var(t, x, _k=k, _ident=ident):
            if _k > len(x):
                raise EvaluationError(f"unbound variable {_ident}")
            return x[_k - 1]

        return var
    if isinstance(node, Neg):
        f = _compile(node.operand)
        return lambda t, x: -f(t, x)
    if isinstance(node, Binary):
        lf = _compile(node.left)
        rf = _compile(node.right)
        op = node.op
        if op == "+":
            return lambda t, x: lf(t, x) + rf(t, x)
        if op == "-":
            return lambda t, x: lf(t, x) - rf(t, x)
        if op == "*":
            return lambda t, x: lf(t, x) * rf(t, x)
        if op == "/":

            def div(t, x):
                den = rf(t, x)
                if den == 0.0:
                    raise EvaluationError("division by zero")
                return lf(t, x) / den

            return div

        def power(t, x):
            try:
                return math.pow(lf(t, x), rf(t, x))
            except (ValueError, OverflowError, ZeroDivisionError) as exc:
                raise EvaluationError(f"invalid power: {exc}") from exc

        return power
    if isinstance(node, Call):
        fn = _FUNC_IMPL[node.func]
        af = _compile(node.arg)
        return lambda t, x: fn(af(t, x))
    raise TypeError(f"not an AST node: {node!r}")


def evaluate(expr: Expression, t: float, x) -> float:
    """Evaluate expr at time t with state vector x (x1 is x[0])."""
    return expr(t, x)


def max_variable_index(expr: Expression) -> int:
    """Highest xk index appearing in expr, 0 if none."""

    def walk(node) -> int:
        if isinstance(node, Name):
            return int(node.ident[1:]) if node.ident.startswith("x") else 0
        if isinstance(node, Neg):
            return walk(node.operand)
        if isinstance(node, Binary):
            return max(walk(node.left), walk(node.right))
        if isinstance(node, Call):
            return walk(node.arg)
        return 0

    return walk(expr.root)


def unparse(expr: Expression) -> str:
    """Render an Expression back to source text (fully parenthesized)."""

    def walk(node) -> str:
        if isinstance(node, Num):
            return repr(node.value)
        if isinstance(node, Name):
            return node.ident
        if isinstance(node, Neg):
            return f"(-{walk(node.operand)})"
        if isinstance(node, Binary):
            return f"({walk(node.left)} {node.op} {walk(node.right)})"
        if isinstance(node, Call):
            return f"{node.func}({walk(node.arg)})"
        raise TypeError(f"not an AST node: {node!r}")

    return walk(expr.root)
