"""
Parser for the domain expression language.

Grammar:

    expr   := term (("+" | "-") term)*
    term   := unary ("*" unary)*
    unary  := "-" unary | power
    power  := atom ("^" INT)?
    atom   := NUMBER ("/" NUMBER)? | "z" INT | FUNC "(" expr ")" | "(" expr ")"
            | "|" expr "|" "^" EVEN_INT
    FUNC   := "conj" | "Re" | "Im"

`|e|^k` is sugar for (e * conj(e))^(k/2) and requires an even k. Literals are
real rationals (integers, decimals, or INT/INT).
"""

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Set, Tuple, Union

from .algebra.poly import CPoly
from .exceptions import ParseError

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+(?:\.\d+)?)|(?P<var>z\d+)|(?P<func>conj|Re|Im)|(?P<op>[-+*^()|/]))"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    start: int
    end: int


# -- AST ------------------------------------------------------------------------


@dataclass(frozen=True)
class Number:
    value: Fraction
    span: Tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Var:
    index: int  # 1-based as written
    span: Tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Call:
    func: str  # conj, Re or Im
    arg: "Expr"
    span: Tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Abs:
    arg: "Expr"
    power: int
    span: Tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Neg:
    arg: "Expr"
    span: Tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    power: int
    span: Tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str  # "+", "-" or "*"
    left: "Expr"
    right: "Expr"
    span: Tuple[int, int] = field(default=(0, 0), compare=False)


Expr = Union[Number, Var, Call, Abs, Neg, Pow, BinOp]


# -- tokenizer ------------------------------------------------------------------


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        match = _TOKEN_RE.match(text, pos)
        if not match or match.end() == pos:
            raise ParseError(f"Unexpected character {text[pos]!r}", text, pos)
        kind = match.lastgroup or "op"
        start = match.start(kind)
        tokens.append(Token(kind, match.group(kind), start, match.end()))
        pos = match.end()
    tokens.append(Token("eof", "", len(text), len(text)))
    return tokens


# -- parser ---------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def error(self, message: str, token: Optional[Token] = None) -> ParseError:
        token = token or self.current
        return ParseError(message, self.text, token.start, max(token.end, token.start + 1))

    def expect(self, text: str) -> Token:
        if self.current.text != text:
            found = self.current.text or "end of input"
            raise self.error(f"Expected {text!r}, found {found!r}")
        return self.advance()

    def parse(self) -> Expr:
        if self.current.kind == "eof":
            raise self.error("Empty expression")
        node = self.expr()
        if self.current.kind != "eof":
            raise self.error(f"Unexpected token {self.current.text!r}")
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.current.text in ("+", "-"):
            op = self.advance().text
            right = self.term()
            node = BinOp(op, node, right, (_span(node)[0], _span(right)[1]))
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.current.text == "*":
            self.advance()
            right = self.unary()
            node = BinOp("*", node, right, (_span(node)[0], _span(right)[1]))
        return node

    def unary(self) -> Expr:
        if self.current.text == "-":
            start = self.advance().start
            arg = self.unary()
            return Neg(arg, (start, _span(arg)[1]))
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.current.text == "^":
            self.advance()
            exponent = self.integer()
            return Pow(base, int(exponent.text), (_span(base)[0], exponent.end))
        return base

    def integer(self) -> Token:
        token = self.current
        if token.kind != "number" or "." in token.text:
            raise self.error("Expected a nonnegative integer exponent")
        return self.advance()

    def atom(self) -> Expr:
        token = self.current
        if token.kind == "number":
            self.advance()
            value = Fraction(token.text)
            end = token.end
            if self.current.text == "/":
                self.advance()
                denominator = self.current
                if denominator.kind != "number":
                    raise self.error("Division is only supported between numeric literals")
                self.advance()
                if Fraction(denominator.text) == 0:
                    raise self.error("Division by zero", denominator)
                value = value / Fraction(denominator.text)
                end = denominator.end
            return Number(value, (token.start, end))
        if token.kind == "var":
            self.advance()
            index = int(token.text[1:])
            if index < 1:
                raise self.error("Variables are numbered from z1", token)
            return Var(index, (token.start, token.end))
        if token.kind == "func":
            self.advance()
            self.expect("(")
            arg = self.expr()
            close = self.expect(")")
            return Call(token.text, arg, (token.start, close.end))
        if token.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if token.text == "|":
            self.advance()
            arg = self.expr()
            close = self.expect("|")
            if self.current.text != "^":
                raise ParseError(
                    "Modulus must be raised to an even power (|e|^k)",
                    self.text,
                    token.start,
                    close.end,
                )
            self.advance()
            exponent = self.integer()
            power = int(exponent.text)
            if power % 2:
                raise ParseError(
                    f"Odd modulus power |e|^{power} is not polynomial",
                    self.text,
                    token.start,
                    exponent.end,
                )
            return Abs(arg, power, (token.start, exponent.end))
        if token.kind == "eof":
            raise self.error("Unexpected end of input")
        raise self.error(f"Unexpected token {token.text!r}")


def _span(node: Expr) -> Tuple[int, int]:
    return node.span


def parse_expression(text: str) -> Expr:
    """Parse an expression string into an AST, raising ParseError with a source span."""
    return _Parser(text).parse()


def parse_domain(text: str) -> Expr:
    """
    Parse the expression of a domain description.

    Args:
        text: Expression such as "Re(z3) + |z1|^2 + |z2|^2"

    Returns:
        The expression AST

    Raises:
        ParseError: With line, column and span of the offending token
    """
    return parse_expression(text)


# -- printing -------------------------------------------------------------------


def _precedence(node: Expr) -> int:
    if isinstance(node, BinOp):
        return 1 if node.op in ("+", "-") else 2
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Pow):
        return 4
    return 5


def _wrap(node: Expr, needed: int, strict: bool = False) -> str:
    text = pretty_print(node)
    prec = _precedence(node)
    if prec < needed or (strict and prec == needed):
        return f"({text})"
    return text


def pretty_print(node: Expr) -> str:
    """Render an AST so that parse_expression(pretty_print(ast)) == ast."""
    if isinstance(node, Number):
        value = node.value
        return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    if isinstance(node, Var):
        return f"z{node.index}"
    if isinstance(node, Call):
        return f"{node.func}({pretty_print(node.arg)})"
    if isinstance(node, Abs):
        return f"|{pretty_print(node.arg)}|^{node.power}"
    if isinstance(node, Neg):
        return "-" + _wrap(node.arg, 3)
    if isinstance(node, Pow):
        return _wrap(node.base, 5) + f"^{node.power}"
    level = 1 if node.op in ("+", "-") else 2
    return f"{_wrap(node.left, level)} {node.op} {_wrap(node.right, level, strict=True)}"


# -- conversion -----------------------------------------------------------------


def variables(node: Expr) -> Set[int]:
    """1-based indices of the variables appearing in the expression."""
    if isinstance(node, Var):
        return {node.index}
    if isinstance(node, Number):
        return set()
    if isinstance(node, BinOp):
        return variables(node.left) | variables(node.right)
    if isinstance(node, Pow):
        return variables(node.base)
    return variables(node.arg)


def to_cpoly(node: Expr, n: Optional[int] = None) -> CPoly:
    """Expand an AST into an exact polynomial in n variables."""
    if n is None:
        n = max(variables(node) or {1})
    return _expand(node, n)


def _expand(node: Expr, n: int) -> CPoly:
    if isinstance(node, Number):
        return CPoly.constant(n, float(node.value))
    if isinstance(node, Var):
        if node.index > n:
            raise ParseError(f"Variable z{node.index} exceeds dimension {n}", "", node.span[0])
        return CPoly.variable(n, node.index - 1)
    if isinstance(node, Call):
        inner = _expand(node.arg, n)
        if node.func == "conj":
            return inner.conjugate()
        if node.func == "Re":
            return inner.real_part()
        return inner.imag_part()
    if isinstance(node, Abs):
        inner = _expand(node.arg, n)
        return (inner * inner.conjugate()) ** (node.power // 2)
    if isinstance(node, Neg):
        return -_expand(node.arg, n)
    if isinstance(node, Pow):
        return _expand(node.base, n) ** node.power
    left, right = _expand(node.left, n), _expand(node.right, n)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    return left * right
