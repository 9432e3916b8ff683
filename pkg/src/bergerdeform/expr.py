"""Arithmetic expression language for chart data.

Metric components, the structure tensor, the distinguished vector field and
the conformal factor are all supplied as strings in this small language:

    expr    :=  term (('+' | '-') term)*
    term    :=  unary (('*' | '/') unary)*
    unary   :=  '-' unary | power
    power   :=  atom ('^' unary)?            # right-associative
    atom    :=  NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'

Identifiers are chart coordinates, the constants ``pi`` and ``e``, or one of
the functions sin, cos, tan, sinh, cosh, tanh, exp, log, sqrt. ``^`` binds
tighter than unary minus, so ``-x^2`` is ``-(x^2)``.

Parsed expressions are immutable and evaluation is pure, so a compiled
expression can be evaluated concurrently at many points. Evaluation returns
a :class:`~bergerdeform.jets.Jet`, i.e. exact derivatives up to third order.

``a ^ b`` with a literal exponent uses the power rule directly (so integer
exponents accept non-positive bases); a non-literal exponent is evaluated as
``exp(b * log(a))`` and therefore requires a strictly positive base.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import CONSTANTS, JET_FUNCTIONS, Jet, JetDomainError

__all__ = [
    "Expression",
    "Num",
    "Coord",
    "Const",
    "Neg",
    "BinOp",
    "Call",
    "ExpressionError",
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "UnknownFunctionError",
    "EvalDomainError",
    "parse_expression",
    "to_source",
    "eval_jet",
    "eval_jet3",
]


class ExpressionError(ValueError):
    """Base class for parse and evaluation failures."""


class ExprSyntaxError(ExpressionError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ExprSyntaxError):
    pass


class UnknownFunctionError(ExprSyntaxError):
    pass


class EvalDomainError(ExpressionError):
    """A sub-expression was evaluated outside the domain of a primitive."""

    def __init__(self, message: str, node: "Expression"):
        self.node = node
        super().__init__(f"{message} in sub-expression {to_source(node)}")


class Expression:
    """Base class of all AST nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Num(Expression):
    value: float


@dataclass(frozen=True)
class Coord(Expression):
    name: str
    index: int


@dataclass(frozen=True)
class Const(Expression):
    name: str


@dataclass(frozen=True)
class Neg(Expression):
    operand: Expression


@dataclass(frozen=True)
class BinOp(Expression):
    op: str
    left: Expression
    right: Expression


@dataclass(frozen=True)
class Call(Expression):
    func: str
    arg: Expression


# -- tokenizer ---------------------------------------------------------------

_OPS = set("+-*/^()")


def _tokenize(source: str):
    tokens = []
    pos = 0
    size = len(source)
    while pos < size:
        ch = source[pos]
        if ch.isspace():
            pos += 1
            continue
        if ch in _OPS:
            tokens.append((ch, ch, pos))
            pos += 1
            continue
        if ch.isdigit() or (ch == "." and pos + 1 < size and source[pos + 1].isdigit()):
            start = pos
            while pos < size and source[pos].isdigit():
                pos += 1
            if pos < size and source[pos] == ".":
                pos += 1
                while pos < size and source[pos].isdigit():
                    pos += 1
            if pos < size and source[pos] in "eE":
                mark = pos
                pos += 1
                if pos < size and source[pos] in "+-":
                    pos += 1
                if pos < size and source[pos].isdigit():
                    while pos < size and source[pos].isdigit():
                        pos += 1
                else:
                    pos = mark  # not an exponent, e.g. "2*e"
            tokens.append(("num", source[start:pos], start))
            continue
        if ch.isalpha() or ch == "_":
            start = pos
            while pos < size and (source[pos].isalnum() or source[pos] == "_"):
                pos += 1
            tokens.append(("ident", source[start:pos], start))
            continue
        raise ExprSyntaxError(f"unexpected character {ch!r}", pos)
    tokens.append(("end", "", size))
    return tokens


# -- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, source: str, coordinates):
        self.tokens = _tokenize(source)
        self.pos = 0
        self.coord_index = {name: i for i, name in enumerate(coordinates)}

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str):
        tok = self.peek()
        if tok[0] != kind:
            raise ExprSyntaxError(f"expected {kind!r}", tok[2])
        return self.advance()

    def parse(self) -> Expression:
        node = self.parse_sum()
        tok = self.peek()
        if tok[0] != "end":
            raise ExprSyntaxError(f"unexpected {tok[1]!r}", tok[2])
        return node

    def parse_sum(self) -> Expression:
        node = self.parse_term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            node = BinOp(op, node, self.parse_term())
        return node

    def parse_term(self) -> Expression:
        node = self.parse_unary()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            node = BinOp(op, node, self.parse_unary())
        return node

    def parse_unary(self) -> Expression:
        if self.peek()[0] == "-":
            self.advance()
            operand = self.parse_unary()
            if isinstance(operand, Num):
                return Num(-operand.value)
            return Neg(operand)
        return self.parse_power()

    def parse_power(self) -> Expression:
        base = self.parse_atom()
        if self.peek()[0] == "^":
            self.advance()
            return BinOp("^", base, self.parse_unary())
        return base

    def parse_atom(self) -> Expression:
        kind, text, offset = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(text))
        if kind == "(":
            self.advance()
            node = self.parse_sum()
            self.expect(")")
            return node
        if kind == "ident":
            self.advance()
            if self.peek()[0] == "(":
                if text not in JET_FUNCTIONS:
                    raise UnknownFunctionError(f"unknown function {text!r}", offset)
                self.advance()
                arg = self.parse_sum()
                self.expect(")")
                return Call(text, arg)
            if text in CONSTANTS:
                return Const(text)
            if text in self.coord_index:
                return Coord(text, self.coord_index[text])
            raise UnknownIdentifierError(f"unknown identifier {text!r}", offset)
        raise ExprSyntaxError("expected a number, identifier or '('", offset)


def parse_expression(source: str, coordinates) -> Expression:
    """Parse ``source`` against the given coordinate names."""
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(source, coordinates).parse()


# -- canonical printer --------------------------------------------------------


def to_source(expr: Expression) -> str:
    """Fully parenthesized form; parse(to_source(t)) reproduces t."""
    if isinstance(expr, Num):
        # negative literals need their own parentheses: ^ binds tighter than
        # unary minus, so a bare "-2.0 ^ 3.0" would regroup on re-parsing
        r = repr(expr.value)
        return f"({r})" if expr.value < 0 else r
    if isinstance(expr, (Coord, Const)):
        return expr.name
    if isinstance(expr, Neg):
        return f"(-{to_source(expr.operand)})"
    if isinstance(expr, BinOp):
        return f"({to_source(expr.left)} {expr.op} {to_source(expr.right)})"
    if isinstance(expr, Call):
        return f"{expr.func}({to_source(expr.arg)})"
    raise TypeError(f"not an expression node: {expr!r}")


# -- evaluation ----------------------------------------------------------------


def eval_jet(expr: Expression, points, order: int = 3) -> Jet:
    """Evaluate with exact derivatives at ``points`` of shape (..., n)."""
    points = np.asarray(points, dtype=float)
    n = points.shape[-1]
    batch = points.shape[:-1]

    def rec(node: Expression) -> Jet:
        if isinstance(node, Num):
            return Jet.constant(node.value, n, batch, order)
        if isinstance(node, Const):
            return Jet.constant(CONSTANTS[node.name], n, batch, order)
        if isinstance(node, Coord):
            return Jet.coordinate(points, node.index, order)
        if isinstance(node, Neg):
            return -rec(node.operand)
        if isinstance(node, BinOp):
            a = rec(node.left)
            if node.op == "^":
                return _power(a, node)
            b = rec(node.right)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            try:
                return a / b
            except JetDomainError as err:
                raise EvalDomainError(str(err), node) from None
        if isinstance(node, Call):
            u = rec(node.arg)
            try:
                return JET_FUNCTIONS[node.func](u)
            except JetDomainError as err:
                raise EvalDomainError(str(err), node) from None
        raise TypeError(f"not an expression node: {node!r}")

    def _power(base: Jet, node: BinOp) -> Jet:
        if isinstance(node.right, Num):
            try:
                return base ** node.right.value
            except JetDomainError as err:
                raise EvalDomainError(str(err), node) from None
        if np.any(base.value <= 0.0):
            raise EvalDomainError(
                "non-literal exponent requires a strictly positive base", node
            )
        return JET_FUNCTIONS["exp"](rec(node.right) * JET_FUNCTIONS["log"](base))

    return rec(expr)


def eval_jet3(expr: Expression, point) -> Jet:
    """Order-3 jet of ``expr`` at a single point (the spec'd entry point)."""
    return eval_jet(expr, point, order=3)
