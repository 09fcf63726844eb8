"""Δ-derivative, Δ-integral and the generalized monomials h_k.

A Δ-integral over ``[a, b] ∩ T`` splits into classical integrals over the
continuous pieces plus ``μ(t)·g(t)`` for every right-scattered ``t`` in
``[a, b)``.  The scattered part is accumulated in exact rational
arithmetic whenever the integrand allows it, so purely discrete scales
integrate without rounding until the final conversion to float.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

import numpy as np

from .errors import DepthExceeded, NotDifferentiable, NotInKappa, QuadratureFailure
from .funcspec import ExprFunc
from .timescale import Dense, Jump, TimeScale

Scalar = Union[Fraction, float]

MAX_MONOMIAL_DEPTH = 4


@dataclass(frozen=True)
class QuadratureSettings:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 10_000

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and positive, got {v!r}")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")


DEFAULT_SETTINGS = QuadratureSettings()

# 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1] (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes (x1, x3, x5, x7=0)
_GAUSS_W = np.zeros(15)
_GAUSS_W[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


def _gk15(f, a: float, b: float):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    y = np.asarray(f(mid + half * _NODES), dtype=float)
    if y.shape != _NODES.shape:
        y = np.broadcast_to(y, _NODES.shape)
    if not np.all(np.isfinite(y)):
        raise QuadratureFailure(f"integrand is not finite on [{a}, {b}]")
    kron = half * float(_KRONROD_W @ y)
    gauss = half * float(_GAUSS_W @ y)
    resabs = abs(half) * float(_KRONROD_W @ np.abs(y))
    err = abs(kron - gauss)
    # below this the estimate is pure rounding noise
    floor = 50 * np.finfo(float).eps * resabs
    return kron, (0.0 if err <= floor else err)


def adaptive_quad(f: Callable, a: float, b: float, settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """Globally adaptive Gauss–Kronrod (G7/K15) integral of a vectorized ``f``."""
    if a == b:
        return 0.0
    val, err = _gk15(f, a, b)
    heap = [(-err, a, b, val)]
    while True:
        total = math.fsum(item[3] for item in heap)
        total_err = math.fsum(-item[0] for item in heap)
        if total_err <= max(settings.abs_tol, settings.rel_tol * abs(total)):
            return total
        if len(heap) >= settings.max_subdivisions:
            raise QuadratureFailure(
                f"no convergence on [{a}, {b}] within {settings.max_subdivisions} subintervals "
                f"(error estimate {total_err:.3g})"
            )
        _, lo, hi, _ = heapq.heappop(heap)
        m = 0.5 * (lo + hi)
        for x0, x1 in ((lo, m), (m, hi)):
            v, e = _gk15(f, x0, x1)
            heapq.heappush(heap, (-e, x0, x1, v))


# -- Δ-integrands -----------------------------------------------------------

@dataclass(frozen=True)
class Integrand:
    """A function on a time scale, split by point type.

    ``dense`` is evaluated (vectorized) on continuous pieces, where σ(t) = t.
    ``jump(t, σ(t))`` gives the value at a right-scattered point; it returns
    a Fraction when the value is exactly representable.
    """

    dense: Callable[[np.ndarray], np.ndarray]
    jump: Callable[[float, float], Scalar]

    def __mul__(self, other: "Integrand") -> "Integrand":
        return Integrand(
            lambda x: self.dense(x) * other.dense(x),
            lambda t, s: _mix(self.jump(t, s), other.jump(t, s), "*"),
        )

    def __add__(self, other: "Integrand") -> "Integrand":
        return Integrand(
            lambda x: self.dense(x) + other.dense(x),
            lambda t, s: _mix(self.jump(t, s), other.jump(t, s), "+"),
        )

    def scaled(self, c) -> "Integrand":
        return Integrand(lambda x: float(c) * self.dense(x), lambda t, s: _mix(_exact(c), self.jump(t, s), "*"))


def _exact(c) -> Scalar:
    try:
        return Fraction(c)
    except (TypeError, ValueError):
        return float(c)


def _mix(x: Scalar, y: Scalar, op: str) -> Scalar:
    if not (isinstance(x, Fraction) and isinstance(y, Fraction)):
        x, y = float(x), float(y)
    return x * y if op == "*" else x + y


def of_function(f: ExprFunc) -> Integrand:
    return Integrand(f, lambda t, s: f.value(t))


def of_sigma(f: ExprFunc) -> Integrand:
    """``f ∘ σ``: equal to f on continuous pieces, f(σ(t)) at scattered points."""
    return Integrand(f, lambda t, s: f.value(s))


def of_delta(f: ExprFunc) -> Integrand:
    """``f^Δ``: classical derivative on continuous pieces, jump quotient otherwise."""
    df = f.derivative

    def jump(t, s):
        if f.is_rational:
            return (f.exact(s) - f.exact(t)) / (Fraction(s) - Fraction(t))
        return (f(s) - f(t)) / (s - t)

    return Integrand(df, jump)


def linear(alpha: float) -> Integrand:
    """``t ↦ t − alpha``."""
    fa = Fraction(alpha)
    return Integrand(lambda x: x - alpha, lambda t, s: Fraction(t) - fa)


def constant(c) -> Integrand:
    return Integrand(lambda x: np.full(np.shape(x), float(c)), lambda t, s: _exact(c))


def integrate_parts(T: TimeScale, g: Integrand, a: float, b: float,
                    settings: QuadratureSettings = DEFAULT_SETTINGS) -> tuple[Fraction, float]:
    """``∫_a^b g Δt`` as (exact scattered part, floating part); sum them for the value."""
    a, b = T.snap(a), T.snap(b)
    if a == b:
        return Fraction(0), 0.0
    if a > b:
        ex, fl = integrate_parts(T, g, b, a, settings)
        return -ex, -fl
    exact = Fraction(0)
    approx = []
    for piece in T.pieces(a, b):
        if isinstance(piece, Dense):
            approx.append(adaptive_quad(g.dense, piece.left, piece.right, settings))
        else:
            v = g.jump(piece.t, piece.sigma)
            if isinstance(v, Fraction):
                exact += v * (Fraction(piece.sigma) - Fraction(piece.t))
            else:
                approx.append(float(v) * (piece.sigma - piece.t))
    return exact, math.fsum(approx)


def integrate(T: TimeScale, g: Integrand, a: float, b: float,
              settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    exact, approx = integrate_parts(T, g, a, b, settings)
    return float(exact) + approx


def check_smooth(T: TimeScale, f: ExprFunc, a: float | None = None, b: float | None = None) -> None:
    """Raise NotDifferentiable unless f is smooth on every continuous piece of [a, b]."""
    if f.is_safe:
        return
    lo = T.min if a is None else a
    hi = T.max if b is None else b
    for piece in T.pieces(lo, hi):
        if isinstance(piece, Dense) and not f.smooth_on(piece.left, piece.right):
            raise NotDifferentiable(
                f"{f.text} is not smooth on the continuous piece [{piece.left}, {piece.right}]"
            )


# -- public operations ------------------------------------------------------

def delta_derivative(T: TimeScale, f: ExprFunc, t: float) -> float:
    t = T.snap(t)
    if not T.in_kappa(t):
        raise NotInKappa(f"{t} is a left-scattered maximum; f^Δ is undefined there")
    j = T.jump_operators(t)
    if j.mu > 0:
        return float(of_delta(f).jump(t, j.sigma))
    i = T._index(t)
    left, right = T.segments[i]
    if not f.smooth_on(left, right):
        raise NotDifferentiable(f"{f.text} is not smooth around t = {t}")
    return f.derivative(t)


def delta_integral(T: TimeScale, f: ExprFunc, a: float, b: float,
                   settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    return integrate(T, of_function(f), a, b, settings)


def delta_integral_sigma(T: TimeScale, f: ExprFunc, a: float, b: float,
                         settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    return integrate(T, of_sigma(f), a, b, settings)


def h2_exact(T: TimeScale, t: float, s: float) -> Fraction:
    """h_2(t, s) = ∫_s^t (τ − s) Δτ with exact per-piece antiderivatives."""
    t, s = T.snap(t), T.snap(s)
    if t == s:
        return Fraction(0)
    lo, hi = min(t, s), max(t, s)
    fs = Fraction(s)
    total = Fraction(0)
    for piece in T.pieces(lo, hi):
        if isinstance(piece, Dense):
            c, d = Fraction(piece.left), Fraction(piece.right)
            total += ((d - fs) ** 2 - (c - fs) ** 2) / 2
        else:
            total += (Fraction(piece.sigma) - Fraction(piece.t)) * (Fraction(piece.t) - fs)
    return total if t > s else -total


def _h_generic(T: TimeScale, k: int, t: float, s: float, settings: QuadratureSettings) -> Scalar:
    if k == 0:
        return Fraction(1)
    if k == 1:
        return Fraction(t) - Fraction(s)
    if k == 2:
        return h2_exact(T, t, s)

    def dense(x):
        return np.array([float(_h_generic(T, k - 1, xi, s, settings)) for xi in np.ravel(x)])

    g = Integrand(dense, lambda tau, sig: _h_generic(T, k - 1, tau, s, settings))
    exact, approx = integrate_parts(T, g, s, t, settings)
    return exact if approx == 0.0 and T.is_discrete else float(exact) + approx


def monomial_closed_form(T: TimeScale, k: int, t: float, s: float) -> Scalar | None:
    """Closed form of h_k for the canonical families, or None for other scales."""
    fam = T.family
    t_, s_ = Fraction(t), Fraction(s)
    if fam.name == "continuous":
        return (t_ - s_) ** k / math.factorial(k)
    if fam.name == "hgrid":
        h = Fraction(fam.step)
        out = Fraction(1)
        for nu in range(k):
            out *= (t_ - s_ - nu * h) / (nu + 1)
        return out
    if fam.name == "qlattice":
        q = Fraction(fam.step)
        out = Fraction(1)
        for nu in range(k):
            out *= (t_ - q**nu * s_) / sum(q**mu for mu in range(nu + 1))
        return out
    return None


def monomial_generic(T: TimeScale, k: int, t: float, s: float,
                     settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """h_k from the defining recursion only (no closed forms)."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k > MAX_MONOMIAL_DEPTH:
        raise DepthExceeded(f"h_k is limited to k <= {MAX_MONOMIAL_DEPTH}, got {k}")
    t, s = T.snap(t), T.snap(s)
    return float(_h_generic(T, k, t, s, settings))


def monomial_h(T: TimeScale, k: int, t: float, s: float,
               settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """h_k(t, s); uses the family closed form when one applies, after cross-checking it."""
    value = monomial_generic(T, k, t, s, settings)
    closed = monomial_closed_form(T, k, T.snap(t), T.snap(s))
    if closed is None:
        return value
    closed = float(closed)
    if not math.isclose(value, closed, rel_tol=1e-8, abs_tol=1e-10):
        raise ArithmeticError(
            f"h_{k}({t}, {s}): recursion gives {value!r}, closed form {closed!r}"
        )
    return closed
