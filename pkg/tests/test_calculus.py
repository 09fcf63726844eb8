import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsostrowski import timescale as ts
from tsostrowski.calculus import (
    QuadratureSettings,
    adaptive_quad,
    delta_derivative,
    delta_integral,
    delta_integral_sigma,
    h2_exact,
    integrate,
    monomial_closed_form,
    monomial_generic,
    monomial_h,
    of_delta,
    of_function,
    of_sigma,
)
from tsostrowski.errors import (
    DepthExceeded,
    NotDifferentiable,
    NotInKappa,
    NotInScale,
    QuadratureFailure,
)
from tsostrowski.funcspec import parse_expr, polynomial

import oracles

Z3 = ts.integers(0, 3)
UNIT = ts.continuous(0, 1)
Q2 = ts.qlattice(2, 0, 3)
MIXED = ts.from_segments([[0, 1], [2, 2]])


def test_gauss_kronrod_exact_for_low_degree():
    for deg in range(0, 23):
        got = adaptive_quad(lambda x: x**deg, 0.0, 1.0)
        assert got == pytest.approx(1 / (deg + 1), rel=1e-14, abs=1e-15)


def test_adaptive_quad_on_oscillatory_integrand():
    got = adaptive_quad(lambda x: np.sin(50 * x) ** 2, 0.0, math.pi)
    assert got == pytest.approx(math.pi / 2, rel=1e-10)


def test_quadrature_failure():
    tight = QuadratureSettings(abs_tol=1e-15, rel_tol=1e-15, max_subdivisions=3)
    with pytest.raises(QuadratureFailure):
        adaptive_quad(lambda x: np.sqrt(np.abs(x - 0.3)), 0.0, 1.0, tight)


def test_settings_validation():
    with pytest.raises(ValueError):
        QuadratureSettings(abs_tol=0)
    with pytest.raises(ValueError):
        QuadratureSettings(rel_tol=float("nan"))


@pytest.mark.parametrize(
    "T, t, expected",
    [(Z3, 1, 3.0), (UNIT, 0.5, 1.0), (Q2, 2, 6.0)],
)
def test_delta_derivative_examples(T, t, expected):
    assert delta_derivative(T, parse_expr("t^2"), t) == expected


def test_delta_derivative_errors():
    f = parse_expr("t^2")
    with pytest.raises(NotInKappa):
        delta_derivative(Z3, f, 3)
    with pytest.raises(NotInScale):
        delta_derivative(Z3, f, 1.5)
    with pytest.raises(NotDifferentiable):
        delta_derivative(ts.continuous(-1, 1), parse_expr("1/t"), 0.5)
    # 1/t on a scale without 0 in any dense piece is fine
    assert delta_derivative(ts.continuous(1, 2), parse_expr("1/t"), 1.0) == -1.0


def test_delta_derivative_at_dense_left_scattered_point():
    T = ts.from_segments([[0, 0], [1, 2]])
    assert delta_derivative(T, parse_expr("t^3"), 1) == 3.0


@pytest.mark.parametrize(
    "T, a, b, expected",
    [(Z3, 0, 3, 3.0), (UNIT, 0, 1, 0.5), (MIXED, 0, 2, 1.5)],
)
def test_delta_integral_examples(T, a, b, expected):
    assert delta_integral(T, parse_expr("t"), a, b) == pytest.approx(expected, abs=1e-14)


def test_delta_integral_sigma_examples():
    t = parse_expr("t")
    assert delta_integral_sigma(Z3, t, 0, 3) == 6.0
    # (t²)^Δ = t + σ(t), so ∫σ = b² − a² − ∫t
    assert delta_integral_sigma(Z3, t, 0, 3) == 9 - delta_integral(Z3, t, 0, 3)
    assert delta_integral_sigma(UNIT, t, 0, 1) == pytest.approx(0.5, abs=1e-15)
    assert delta_integral_sigma(ts.integers(0, 2), parse_expr("t^2"), 0, 2) == 5.0


def test_delta_integral_orientation_and_empty():
    f = parse_expr("t^3 - t")
    T = ts.from_segments([[0, 1], [1.5, 1.5], [2, 3]])
    assert delta_integral(T, f, 2, 2) == 0.0
    assert delta_integral(T, f, 3, 0) == pytest.approx(-delta_integral(T, f, 0, 3), abs=1e-12)


SCALES = [
    ts.integers(-2, 5),
    ts.continuous(-1, 2),
    ts.qlattice(1.5, 0, 4),
    ts.hgrid(0, 2, 0.25),
    ts.from_segments([[-1, 0], [0.5, 0.5], [1, 1], [1.25, 2]]),
]


@pytest.mark.parametrize("T", SCALES, ids=lambda T: T.describe())
@pytest.mark.parametrize("text", ["t^4 - 2*t + 1", "sin(t)*exp(t/2)", "3"])
def test_delta_integral_against_oracle(T, text):
    f = parse_expr(text)
    exact = f.exact if f.is_rational else None
    for sigma, fn in ((False, delta_integral), (True, delta_integral_sigma)):
        ref = oracles.delta_integral(T.segments, f, T.min, T.max, sigma=sigma, fn_exact=exact)
        assert fn(T, f, T.min, T.max) == pytest.approx(ref, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("T", SCALES, ids=lambda T: T.describe())
def test_delta_derivative_of_square_is_t_plus_sigma(T):
    f = parse_expr("t^2")
    pts = sorted({p for seg in T.segments for p in (seg[0], seg[1], sum(seg) / 2)})
    for t in pts:
        if T.in_kappa(t):
            assert delta_derivative(T, f, t) == pytest.approx(t + T.sigma(t), abs=1e-12)


def test_discrete_integral_is_exact_sum():
    f = polynomial([Fraction(1, 3), -2, 0, 5])
    T = ts.qlattice(1.5, 0, 6)
    pts = [s[0] for s in T.segments]
    ref = sum((Fraction(q) - Fraction(p)) * f.exact(p) for p, q in zip(pts, pts[1:]))
    assert abs(delta_integral(T, f, T.min, T.max) - float(ref)) <= 1e-12


# -- monomials --------------------------------------------------------------

@pytest.mark.parametrize(
    "T, k, t, s, expected",
    [
        (ts.continuous(0, 5), 2, 3, 1, 2.0),
        (ts.integers(0, 6), 2, 5, 2, 3.0),
        (Q2, 2, 4, 1, 2.0),
        (ts.integers(0, 6), 0, 5, 2, 1.0),
        (ts.integers(0, 6), 1, 5, 2, 3.0),
    ],
)
def test_monomial_examples(T, k, t, s, expected):
    assert monomial_h(T, k, t, s) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("T", SCALES + [MIXED], ids=lambda T: T.describe())
def test_monomial_vanishes_on_diagonal(T):
    for k in range(1, 5):
        assert monomial_h(T, k, T.min, T.min) == 0.0


def test_monomial_depth_limit():
    with pytest.raises(DepthExceeded):
        monomial_h(Z3, 5, 3, 0)


def test_h2_against_recursive_oracle():
    T = ts.from_segments([[0, 0.5], [1, 1], [1.5, 3]])
    for t in (0, 0.25, 1, 2, 3):
        for s in (0, 0.5, 1, 2.25, 3):
            ref = oracles.h_recursive(T.segments, 2, t, s)
            assert float(h2_exact(T, t, s)) == pytest.approx(ref, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("k", [3, 4])
def test_higher_monomials_against_closed_forms(k):
    cases = [
        (ts.continuous(0, 4), 3.5, 0.5),
        (ts.integers(0, 8), 7, 1),
        (ts.integers(0, 8), 1, 6),
        (ts.qlattice(2, 0, 4), 16, 2),
        (ts.hgrid(0, 3, 0.5), 3, 0.5),
    ]
    for T, t, s in cases:
        assert monomial_generic(T, k, t, s) == pytest.approx(float(monomial_closed_form(T, k, t, s)), rel=1e-10)


def test_h3_against_recursive_oracle_on_mixed_scale():
    T = ts.from_segments([[0, 1], [1.5, 1.5], [2, 2.5]])
    for t, s in ((2.5, 0), (0, 2.5), (1.5, 0.5)):
        ref = oracles.h_recursive(T.segments, 3, t, s)
        assert monomial_h(T, 3, t, s) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_monomial_closed_form_none_for_mixed():
    assert monomial_closed_form(MIXED, 2, 0, 2) is None


# -- Δ-integration laws -----------------------------------------------------

small_poly = st.lists(st.integers(-12, 12).map(lambda n: Fraction(n, 4)), min_size=1, max_size=5).map(polynomial)


@st.composite
def scales(draw):
    kind = draw(st.sampled_from(["integers", "continuous", "qlattice", "mixed"]))
    if kind == "integers":
        a = draw(st.integers(-3, 2))
        return ts.integers(a, a + draw(st.integers(1, 6)))
    if kind == "continuous":
        a = draw(st.integers(-8, 4)) / 4
        return ts.continuous(a, a + draw(st.integers(1, 12)) / 4)
    if kind == "qlattice":
        return ts.qlattice(draw(st.sampled_from([1.5, 2.0])), 0, draw(st.integers(1, 3)))
    cuts = sorted(draw(st.lists(st.integers(-16, 16), min_size=2, max_size=8, unique=True)))
    segs = [(cuts[j] / 8, cuts[j + 1] / 8 if draw(st.booleans()) else cuts[j] / 8) for j in range(0, len(cuts) - 1, 2)]
    if len(segs) == 1:
        segs = [(cuts[0] / 8, cuts[1] / 8)]
    return ts.from_segments(segs)


def _grid_points(T):
    return sorted({p for seg in T.segments for p in (seg[0], seg[1], (seg[0] + seg[1]) / 2)})


@given(scales(), small_poly, small_poly, st.integers(-5, 5), st.integers(-5, 5), st.data())
@settings(max_examples=60, deadline=None)
def test_integral_linearity_and_additivity(T, f, g, alpha, beta, data):
    pts = _grid_points(T)
    a, c, b = sorted(data.draw(st.lists(st.sampled_from(pts), min_size=3, max_size=3)))
    combo = parse_expr(f"({alpha})*({f.text}) + ({beta})*({g.text})")
    lhs = delta_integral(T, combo, a, b)
    rhs = alpha * delta_integral(T, f, a, b) + beta * delta_integral(T, g, a, b)
    assert abs(lhs - rhs) <= 1e-9
    split = delta_integral(T, f, a, c) + delta_integral(T, f, c, b)
    assert abs(delta_integral(T, f, a, b) - split) <= 1e-9
    assert abs(delta_integral(T, f, a, b) + delta_integral(T, f, b, a)) <= 1e-12
    assert delta_integral(T, f, a, a) == 0.0


@given(scales(), small_poly, small_poly)
@settings(max_examples=60, deadline=None)
def test_integration_by_parts(T, f, g):
    a, b = T.min, T.max
    lhs = integrate(T, of_function(f) * of_delta(g), a, b)
    rhs = float(f.exact(b) * g.exact(b) - f.exact(a) * g.exact(a)) - integrate(T, of_delta(f) * of_sigma(g), a, b)
    assert abs(lhs - rhs) <= 1e-9


@given(scales(), st.data())
@settings(max_examples=80, deadline=None)
def test_h2_nonnegative(T, data):
    pts = _grid_points(T)
    t = data.draw(st.sampled_from(pts))
    s = data.draw(st.sampled_from(pts))
    assert h2_exact(T, t, s) >= 0
    assert h2_exact(T, s, t) >= 0
