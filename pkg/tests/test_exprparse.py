import numpy as np
import pytest
from hypothesis import given, strategies as st

from heatctl.errors import DomainError
from heatctl.exprparse import (Binary, CompiledExpr, Num, ParseError, Unary, evaluate, parse,
                               pretty)


def test_constant():
    assert isinstance(parse("1"), Num)
    assert evaluate(parse("1")) == 1.0


def test_example1_kappa_ast_and_value():
    e = parse("(1+2*abs(x))*cosh(x)/3")
    assert isinstance(e, Binary) and e.op == "/"
    assert evaluate(e, 0.0) == pytest.approx(1 / 3, abs=1e-15)
    x = np.linspace(-3, 3, 13)
    assert np.allclose(evaluate(e, x), (1 + 2 * np.abs(x)) * np.cosh(x) / 3, rtol=1e-15)


def test_example2_rho_at_zero():
    assert evaluate(parse("(4+x^2)*(3+abs(x))"), 0.0) == 12.0


def test_abs_and_sgn():
    assert evaluate(parse("abs(-2)")) == 2.0
    assert evaluate(parse("sgn(0)")) == 0.0
    assert evaluate(parse("sgn(-3)")) == -1.0


def test_syntax_error_offset():
    with pytest.raises(ParseError) as exc:
        parse("2**")
    assert exc.value.offset == 2
    assert exc.value.expected


def test_power_right_associative():
    assert evaluate(parse("2^3^2")) == 2.0 ** 9


def test_unary_minus_binds_tighter_than_power_base():
    e = parse("-x^2")
    assert isinstance(e, Binary) and isinstance(e.left, Unary)
    assert evaluate(e, 3.0) == 9.0


@pytest.mark.parametrize("src, x", [("1/x", 0.0), ("ln(x)", 0.0), ("ln(x)", -1.0),
                                    ("sqrt(x)", -1.0)])
def test_domain_errors(src, x):
    with pytest.raises(DomainError):
        evaluate(parse(src), x)


def test_time_variable_and_pi():
    assert evaluate(parse("exp(t/4)*pi"), 0.0, 4.0) == pytest.approx(np.e * np.pi)


def test_compiled_expr_callable():
    f = CompiledExpr("12*cosh(x)/(1+2*abs(x))")
    assert f(0.0) == 12.0


_leaf = st.one_of(st.integers(1, 9).map(str), st.just("x"))


def _combine(children):
    binop = st.tuples(children, st.sampled_from(["+", "-", "*", "/", "^"]), children) \
        .map(lambda t: f"({t[0]}{t[1]}{t[2]})")
    fn = st.tuples(st.sampled_from(["exp", "cosh", "sinh", "tanh", "abs", "sgn"]), children) \
        .map(lambda t: f"{t[0]}({t[1]})")
    neg = children.map(lambda c: f"-{c}")
    return st.one_of(binop, fn, neg)


exprs = st.recursive(_leaf, _combine, max_leaves=8)


@given(exprs)
def test_pretty_is_a_fixpoint(src):
    once = pretty(parse(src))
    assert pretty(parse(once)) == once


@given(exprs)
def test_pretty_round_trip_evaluates_identically(src):
    e = parse(src)
    e2 = parse(pretty(e))
    xs = np.linspace(-2.0, 2.0, 100)
    with np.errstate(all="ignore"):
        try:
            a = evaluate(e, xs)
        except DomainError:
            with pytest.raises(DomainError):
                evaluate(e2, xs)
            return
        b = evaluate(e2, xs)
    assert np.array_equal(np.asarray(a), np.asarray(b), equal_nan=True)
