"""
Tests for the domain expression parser and pretty-printer.
"""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftl.algebra.poly import CPoly
from ftl.exceptions import ParseError
from ftl.parser import (
    Abs,
    BinOp,
    Call,
    Neg,
    Number,
    Pow,
    Var,
    parse_domain,
    parse_expression,
    pretty_print,
    to_cpoly,
    tokenize,
    variables,
)


def _numbers():
    ints = st.integers(min_value=0, max_value=20).map(Fraction)
    ratios = st.tuples(st.integers(1, 9), st.integers(2, 9)).map(lambda t: Fraction(t[0], t[1]))
    return st.one_of(ints, ratios).map(Number)


def _extend(children):
    return st.one_of(
        st.builds(Call, st.sampled_from(["conj", "Re", "Im"]), children),
        st.builds(Abs, children, st.sampled_from([2, 4, 6])),
        st.builds(Neg, children),
        st.builds(Pow, children, st.integers(0, 4)),
        st.builds(BinOp, st.sampled_from(["+", "-", "*"]), children, children),
    )


expressions = st.recursive(
    st.one_of(_numbers(), st.integers(1, 4).map(Var)),
    _extend,
    max_leaves=12,
)


class TestTokenizer:
    """Test tokenization."""

    def test_tokens(self):
        kinds = [t.kind for t in tokenize("Re(z3) + 2.5*|z1|^2")]
        assert kinds == ["func", "op", "var", "op", "op", "number", "op", "op", "var", "op", "op", "number", "eof"]

    def test_bad_character(self):
        with pytest.raises(ParseError) as e:
            tokenize("z1 + $")
        assert e.value.column == 6


class TestParser:
    """Test parsing and diagnostics."""

    def test_siegel(self):
        ast = parse_domain("Re(z3) + |z1|^2 + |z2|^2")
        assert variables(ast) == {1, 2, 3}
        poly = to_cpoly(ast)
        assert poly.n == 3
        assert poly.coefficient((1, 0, 0), (1, 0, 0)) == 1.0
        assert poly.coefficient((0, 0, 1), (0, 0, 0)) == 0.5

    def test_precedence(self):
        ast = parse_expression("1 + 2*z1^2")
        assert isinstance(ast, BinOp) and ast.op == "+"
        assert isinstance(ast.right, BinOp) and ast.right.op == "*"
        assert isinstance(ast.right.right, Pow)

    def test_left_associative_minus(self):
        poly = to_cpoly(parse_expression("z1 - z1 - z1"))
        assert poly == CPoly.variable(1, 0) * -1.0

    def test_rational_literal(self):
        ast = parse_expression("1/3*|z1|^2")
        assert ast.left == Number(Fraction(1, 3))

    def test_modulus_expansion(self):
        poly = to_cpoly(parse_expression("|z1 + z2|^2"))
        point = np.array([0.5 + 0.5j, -1j])
        assert np.isclose(poly(point), abs(point.sum()) ** 2)

    def test_im_is_real(self):
        assert to_cpoly(parse_expression("Im(z1)^2")).is_real_valued()

    def test_odd_modulus_power(self):
        with pytest.raises(ParseError) as e:
            parse_expression("|z1|^3")
        assert "Odd modulus power" in str(e.value)
        assert e.value.span == (0, 6)

    def test_modulus_needs_power(self):
        with pytest.raises(ParseError):
            parse_expression("|z1| + 1")

    def test_unbalanced_parenthesis(self):
        with pytest.raises(ParseError) as e:
            parse_expression("(z1 + z2")
        assert "Expected ')'" in str(e.value)

    def test_empty(self):
        with pytest.raises(ParseError):
            parse_expression("   ")

    def test_variable_zero(self):
        with pytest.raises(ParseError):
            parse_expression("z0^2")

    def test_division_by_variable(self):
        with pytest.raises(ParseError):
            parse_expression("1/z1")

    def test_caret_on_second_line(self):
        with pytest.raises(ParseError) as e:
            parse_expression("z1 +\n  * z2")
        assert e.value.line == 2
        assert e.value.column == 3
        assert e.value.caret() == "  * z2\n  ^"

    def test_dimension_too_small(self):
        with pytest.raises(ParseError):
            to_cpoly(parse_expression("z3"), n=2)


class TestPrettyPrint:
    """Test canonical printing."""

    def test_known_forms(self):
        assert pretty_print(parse_expression("Re(z3)+|z1|^2+|z2|^2")) == "Re(z3) + |z1|^2 + |z2|^2"
        assert pretty_print(parse_expression("z1 - (z2 - z3)")) == "z1 - (z2 - z3)"
        assert pretty_print(parse_expression("(z1 + z2)*z3")) == "(z1 + z2) * z3"
        assert pretty_print(parse_expression("0.5*z1")) == "1/2 * z1"

    @settings(max_examples=200, deadline=None)
    @given(expressions)
    def test_reparse(self, ast):
        """Printing then parsing returns the same tree."""
        assert parse_expression(pretty_print(ast)) == ast
