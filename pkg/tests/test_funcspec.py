import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsostrowski.errors import DomainError, ExprSyntaxError, UnknownFunction
from tsostrowski.funcspec import (
    BinOp,
    Call,
    Neg,
    Num,
    Pow,
    T,
    diff_expr,
    eval_expr,
    parse_expr,
    polynomial,
    to_text,
)

from oracles import central_difference


def test_parse_polynomial():
    f = parse_expr("t^2 + 3*t")
    assert f.tree == BinOp("+", Pow(T, 2), BinOp("*", Num(Fraction(3)), T))
    assert f.coefficients == [0, 3, 1]


def test_parse_product():
    f = parse_expr("sin(t)*exp(t)")
    assert f.tree == BinOp("*", Call("sin", T), Call("exp", T))


@pytest.mark.parametrize("text", ["t +", "", "(t", "t)", "2 3", "t^t", "t^1.5", "3 $ t", "sin t"])
def test_syntax_errors(text):
    with pytest.raises(ExprSyntaxError):
        parse_expr(text)


def test_syntax_error_reports_position():
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("t + * 2")
    assert info.value.position == 4


def test_unknown_function_and_variable():
    with pytest.raises(UnknownFunction):
        parse_expr("tan(t)")
    with pytest.raises(ExprSyntaxError):
        parse_expr("x + 1")


def test_precedence():
    assert parse_expr("-t^2").tree == Neg(Pow(T, 2))
    assert parse_expr("2*t^3")(2.0) == 16.0
    assert parse_expr("1 - 2 - 3")(0.0) == -4.0
    assert parse_expr("8/4/2")(0.0) == 1.0
    assert parse_expr("t^2^3")(2.0) == 64.0
    assert parse_expr("-2^2")(0.0) == -4.0
    assert parse_expr("(-2)^2")(0.0) == 4.0
    assert parse_expr("t^-1")(4.0) == 0.25
    assert parse_expr("1.5e1 + .5")(0.0) == 15.5


def test_eval_examples():
    assert eval_expr(parse_expr("t^2"), 3) == 9
    assert eval_expr(parse_expr("sin(t)"), 0) == 0
    with pytest.raises(DomainError):
        eval_expr(parse_expr("1/t"), 0)
    with pytest.raises(DomainError):
        eval_expr(parse_expr("log(t)"), -1)
    with pytest.raises(DomainError):
        eval_expr(parse_expr("sqrt(t)"), -1)
    with pytest.raises(DomainError):
        eval_expr(parse_expr("t^-2"), 0)


def test_eval_vectorized():
    f = parse_expr("t^2 + 1")
    np.testing.assert_array_equal(f(np.array([0.0, 1.0, 2.0])), [1.0, 2.0, 5.0])
    np.testing.assert_array_equal(parse_expr("3")(np.zeros(4)), [3.0] * 4)


def test_exact_evaluation():
    f = parse_expr("t^3/3 - 0.1*t")
    assert f.is_rational
    assert f.exact(Fraction(1, 3)) == Fraction(1, 81) - Fraction(1, 30)
    assert not parse_expr("exp(t)").is_rational


def test_diff_examples():
    assert diff_expr(parse_expr("t^2")).text == "2*t"
    assert diff_expr(parse_expr("sin(t)")).text == "cos(t)"
    assert diff_expr(parse_expr("exp(t)*t")).text == "exp(t)*t + exp(t)"


def test_diff_exp_t_matches_central_difference_at_100_points():
    f = parse_expr("exp(t)*t")
    df = diff_expr(f)
    for t in np.linspace(-3, 3, 100):
        fd = central_difference(f, t)
        assert abs(df(t) - fd) <= 1e-5 * (1 + abs(df(t)))


@pytest.mark.parametrize(
    "text", ["cos(2*t)", "log(t^2 + 1)", "sqrt(t^2 + 2)", "1/(t^2 + 1)", "exp(-t^2)*sin(3*t)", "(t - 1)^4/5"]
)
def test_diff_transcendental_against_finite_differences(text):
    f = parse_expr(text)
    df = diff_expr(f)
    for t in np.linspace(-2, 2, 41):
        assert abs(df(t) - central_difference(f, t)) <= 1e-5 * (1 + abs(df(t)))


def test_safe_flag():
    assert parse_expr("t^3 + sin(t)*exp(t)").is_safe
    for text in ("1/t", "log(t)", "sqrt(t)", "t^-1"):
        assert not parse_expr(text).is_safe


def test_smooth_on():
    assert parse_expr("1/t").smooth_on(1, 2)
    assert not parse_expr("1/t").smooth_on(-1, 1)
    assert not parse_expr("1/(t - 0.5)").smooth_on(0, 1)
    assert parse_expr("log(t)").smooth_on(0.5, 3)
    assert not parse_expr("sqrt(t)").smooth_on(0, 1)


def test_polynomial_builder_is_exact():
    f = polynomial([0.1, -2.5, 0.0, 3.0])
    assert f.coefficients == [Fraction(0.1), Fraction(-2.5), 0, Fraction(3)]
    assert parse_expr(f.text) == f


# -- properties -------------------------------------------------------------

coeffs = st.lists(st.integers(-30, 30).map(lambda n: Fraction(n, 4)), min_size=1, max_size=7)


@given(coeffs)
@settings(max_examples=100, deadline=None)
def test_polynomial_derivative_matches_central_difference(cs):
    f = polynomial(cs)
    df = diff_expr(f)
    rng = np.random.default_rng(len(cs))
    h = 1e-6
    for t in rng.uniform(-10, 10, 100):
        # t^6 near 10 makes plain central differences lose digits; compare in relative terms
        scale = 1 + abs(df(t)) + max(abs(f(t)), 1) * 1e-10 / h
        assert abs(df(t) - central_difference(f, t, h)) <= 1e-5 * scale


leaves = st.one_of(
    st.just(T),
    st.integers(-20, 20).map(lambda n: Num(Fraction(n, 4))),
)


def _extend(children):
    return st.one_of(
        st.tuples(st.sampled_from("+-*/"), children, children).map(lambda x: BinOp(*x)),
        children.filter(lambda c: not isinstance(c, (Num, Neg))).map(Neg),
        st.tuples(children, st.integers(-3, 4)).map(lambda x: Pow(*x)),
        st.tuples(st.sampled_from(["sin", "cos", "exp", "log", "sqrt"]), children).map(lambda x: Call(*x)),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


@given(trees)
@settings(max_examples=300, deadline=None)
def test_print_parse_round_trip(tree):
    text = to_text(tree)
    reparsed = parse_expr(text)
    assert reparsed.tree == tree
    assert reparsed.text == text


@given(coeffs, st.integers(-20, 20))
@settings(max_examples=100, deadline=None)
def test_exact_and_float_evaluation_agree(cs, n):
    f = polynomial(cs)
    t = Fraction(n, 8)
    assert math.isclose(float(f.exact(t)), f(float(t)), rel_tol=1e-12, abs_tol=1e-12)
