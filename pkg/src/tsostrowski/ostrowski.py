"""k-point Ostrowski quadrature on time scales.

A ``Partition`` holds division points ``x_0 <= ... <= x_k`` of ``[a, b]``
and weight points ``α_0 = a, α_1, ..., α_k, α_{k+1} = b`` with
``α_i ∈ [x_{i-1}, x_i]``.  The rule is

    Q(f) = Σ_{i=0}^{k} (α_{i+1} − α_i) f(x_i)

and its error against ``∫_a^b f^σ Δt`` is bounded by

    M · Σ_{i=0}^{k-1} (h_2(x_i, α_{i+1}) + h_2(x_{i+1}, α_{i+1})),

with ``M`` the supremum of ``|f^Δ|`` on ``T^κ ∩ [a, b)``.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize_scalar

from .calculus import (
    DEFAULT_SETTINGS,
    QuadratureSettings,
    Scalar,
    check_smooth,
    h2_exact,
    integrate_parts,
    linear,
    of_delta,
    of_sigma,
)
from .errors import (
    MalformedSpec,
    MembershipViolation,
    NotInScale,
    OrderViolation,
    OutOfRange,
    WrongScaleKind,
)
from .funcspec import ExprFunc
from .timescale import Dense, TimeScale

SUP_SAMPLES = 1024
SUP_SAFETY = 1 + 1e-9


@dataclass(frozen=True)
class Partition:
    scale: TimeScale
    xs: tuple[float, ...]
    alphas: tuple[float, ...]

    def __post_init__(self):
        xs, al = self.xs, self.alphas
        k = len(xs) - 1
        if k < 1:
            raise OrderViolation("a partition needs at least two division points")
        if len(al) != k + 2:
            raise OrderViolation(f"{k + 1} division points need {k + 2} weight points, got {len(al)}")
        for name, pts in (("x", xs), ("alpha", al)):
            for i, p in enumerate(pts):
                if not self.scale.contains(p):
                    raise MembershipViolation(f"{name}_{i} = {p!r} is not a point of the time scale")
        if not xs[0] < xs[-1]:
            raise OrderViolation("need a = x_0 < x_k = b")
        if any(x1 < x0 for x0, x1 in zip(xs, xs[1:])):
            raise OrderViolation(f"division points must be non-decreasing: {xs}")
        if al[0] != xs[0] or al[-1] != xs[-1]:
            raise OrderViolation("alpha_0 must equal a and alpha_{k+1} must equal b")
        for i in range(1, k + 1):
            if not xs[i - 1] <= al[i] <= xs[i]:
                raise OrderViolation(f"alpha_{i} = {al[i]!r} is outside [x_{i - 1}, x_{i}] = [{xs[i - 1]}, {xs[i]}]")

    @property
    def k(self) -> int:
        return len(self.xs) - 1

    @property
    def a(self) -> float:
        return self.xs[0]

    @property
    def b(self) -> float:
        return self.xs[-1]

    def weights(self) -> list[float]:
        """Quadrature weights α_{i+1} − α_i attached to f(x_i)."""
        return [self.alphas[i + 1] - self.alphas[i] for i in range(self.k + 1)]

    def to_dict(self) -> dict:
        return {"xs": list(self.xs), "alphas": list(self.alphas), "weights": self.weights()}


def partition(scale: TimeScale, xs, alphas) -> Partition:
    """Build a Partition, snapping values that sit within membership tolerance of the scale."""
    def snap(p, name):
        try:
            return scale.snap(float(p))
        except NotInScale:
            raise MembershipViolation(f"{name} = {p!r} is not a point of the time scale") from None

    return Partition(
        scale,
        tuple(snap(x, f"x_{i}") for i, x in enumerate(xs)),
        tuple(snap(a, f"alpha_{i}") for i, a in enumerate(alphas)),
    )


@dataclass(frozen=True)
class QuadReport:
    q_value: float
    integral_sigma: float
    abs_error: float
    bound: float
    m_used: float
    tightness: float

    def to_dict(self) -> dict:
        return {
            "q_value": self.q_value,
            "integral_sigma": self.integral_sigma,
            "abs_error": self.abs_error,
            "bound": self.bound,
            "m_used": self.m_used,
            "tightness": self.tightness,
        }


def kernel_K(p: Partition, t: float) -> float:
    if not p.a <= t <= p.b:
        raise OutOfRange(f"t = {t} is outside [{p.a}, {p.b}]")
    i = min(bisect.bisect_right(p.xs, t) - 1, p.k - 1)
    return t - p.alphas[i + 1]


def _quadrature_value(p: Partition, f: ExprFunc) -> Scalar:
    if f.is_rational:
        al = [Fraction(a) for a in p.alphas]
        return sum(((al[i + 1] - al[i]) * f.exact(x) for i, x in enumerate(p.xs)), Fraction(0))
    return math.fsum((p.alphas[i + 1] - p.alphas[i]) * f(x) for i, x in enumerate(p.xs))


def quadrature(p: Partition, f: ExprFunc) -> float:
    return float(_quadrature_value(p, f))


def _split(v: Scalar) -> tuple[Fraction, float]:
    return (v, 0.0) if isinstance(v, Fraction) else (Fraction(0), float(v))


def _sigma_integral_parts(p: Partition, f: ExprFunc, settings) -> tuple[Fraction, float]:
    return integrate_parts(p.scale, of_sigma(f), p.a, p.b, settings)


def _kernel_integral_parts(p: Partition, f: ExprFunc, settings) -> tuple[Fraction, float]:
    """∫_a^b K(t) f^Δ(t) Δt, one kernel branch per [x_i, x_{i+1})."""
    fd = of_delta(f)
    exact, approx = Fraction(0), []
    for i in range(p.k):
        if p.xs[i] == p.xs[i + 1]:
            continue
        ex, fl = integrate_parts(p.scale, linear(p.alphas[i + 1]) * fd, p.xs[i], p.xs[i + 1], settings)
        exact += ex
        approx.append(fl)
    return exact, math.fsum(approx)


def montgomery_residual(p: Partition, f: ExprFunc, settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """Q(f) − ∫ f^σ Δt − ∫ K f^Δ Δt, which vanishes by the Montgomery identity."""
    check_smooth(p.scale, f, p.a, p.b)
    qe, qf = _split(_quadrature_value(p, f))
    se, sf = _sigma_integral_parts(p, f, settings)
    ke, kf = _kernel_integral_parts(p, f, settings)
    return float(qe - se - ke) + math.fsum([qf, -sf, -kf])


def _sup_abs_on_segment(df: ExprFunc, c: float, d: float, samples: int, safety: float) -> float:
    grid = np.linspace(c, d, samples)
    vals = np.abs(df(grid))
    best = float(vals.max())
    coeffs = df.coefficients
    if coeffs is not None:
        # |p| on [c, d] peaks at an endpoint or a critical point of p
        if len(coeffs) > 2:
            dcoef = [float(j * coeffs[j]) for j in range(len(coeffs) - 1, 0, -1)]
            roots = np.roots(dcoef)
            real = roots[np.abs(roots.imag) <= 1e-9 * (1 + np.abs(roots.real))].real
            real = real[(real > c) & (real < d)]
            if real.size:
                best = max(best, float(np.abs(df(real)).max()))
        return best
    i = int(vals.argmax())
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, samples - 1)]
    if hi > lo:
        res = minimize_scalar(lambda x: -abs(df(float(x))), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12 * (1 + abs(hi))})
        best = max(best, -float(res.fun))
    return best * safety


def sup_delta_derivative(T: TimeScale, f: ExprFunc, a: float, b: float,
                         samples: int = SUP_SAMPLES, safety: float = SUP_SAFETY) -> float:
    """sup |f^Δ| over T^κ ∩ [a, b).

    Right-scattered points are evaluated exactly.  On continuous pieces a
    polynomial derivative is maximized through its critical points; any
    other derivative is sampled, refined around the best sample, and
    inflated by ``safety``.
    """
    a, b = T.snap(a), T.snap(b)
    if not a < b:
        raise OrderViolation("sup_delta_derivative needs a < b")
    check_smooth(T, f, a, b)
    fd = of_delta(f)
    best: Scalar = Fraction(0)
    for piece in T.pieces(a, b):
        if isinstance(piece, Dense):
            v = _sup_abs_on_segment(f.derivative, piece.left, piece.right, samples, safety)
        else:
            v = abs(fd.jump(piece.t, piece.sigma))
        if v > best:
            best = v
    return float(best)


def bound_factor(p: Partition) -> Fraction:
    """Σ_{i<k} h_2(x_i, α_{i+1}) + h_2(x_{i+1}, α_{i+1}), exactly."""
    T = p.scale
    return sum(
        (h2_exact(T, p.xs[i], p.alphas[i + 1]) + h2_exact(T, p.xs[i + 1], p.alphas[i + 1]) for i in range(p.k)),
        Fraction(0),
    )


def error_bound(p: Partition, M: float, settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    if not M >= 0:
        raise ValueError(f"M must be non-negative, got {M!r}")
    return float(M) * float(bound_factor(p))


def evaluate_rule(p: Partition, f: ExprFunc, settings: QuadratureSettings = DEFAULT_SETTINGS,
                  samples: int = SUP_SAMPLES, safety: float = SUP_SAFETY) -> QuadReport:
    check_smooth(p.scale, f, p.a, p.b)
    qv = _quadrature_value(p, f)
    qe, qf = _split(qv)
    se, sf = _sigma_integral_parts(p, f, settings)
    err = abs(float(qe - se) + (qf - sf))
    m = sup_delta_derivative(p.scale, f, p.a, p.b, samples, safety)
    bound = error_bound(p, m, settings)
    return QuadReport(
        q_value=float(qv),
        integral_sigma=float(se) + sf,
        abs_error=err,
        bound=bound,
        m_used=m,
        tightness=err / bound if bound > 0 else 0.0,
    )


# -- named rules ------------------------------------------------------------

@dataclass
class RuleBuild:
    partition: Partition
    relocated: list[dict] = field(default_factory=list)


RULE_NAMES = (
    "rectangle", "left_rectangle", "right_rectangle", "trapezoid", "three_point",
    "ostrowski_point", "midpoint", "simpson", "avg_mid_trap", "custom",
)
# rules that need no parameters; listed by the CLI ``rules`` command
PARAMETER_FREE_RULES = ("left_rectangle", "right_rectangle", "trapezoid", "midpoint", "simpson", "avg_mid_trap")


def _rule_points(rule: dict, a: float, b: float):
    """(xs, alphas) as labelled requested points, before membership checks."""
    name = rule["rule"]

    def three(x, a1, a2):
        return [("a", a), ("x", x), ("b", b)], [("a", a), ("alpha1", a1), ("alpha2", a2), ("b", b)]

    def rect(alpha):
        return [("a", a), ("b", b)], [("a", a), ("alpha", alpha), ("b", b)]

    if name == "rectangle":
        return rect(float(rule["alpha"]))
    if name == "left_rectangle":
        return rect(b)
    if name == "right_rectangle":
        return rect(a)
    if name == "trapezoid":
        return rect((a + b) / 2)
    if name == "three_point":
        return three(float(rule["x"]), float(rule["alpha1"]), float(rule["alpha2"]))
    if name == "ostrowski_point":
        return three(float(rule["x"]), a, b)
    if name == "midpoint":
        return three((a + b) / 2, a, b)
    if name == "simpson":
        x = float(rule["x"]) if rule.get("x") is not None else (a + b) / 2
        return three(x, (5 * a + b) / 6, (a + 5 * b) / 6)
    if name == "avg_mid_trap":
        return three((a + b) / 2, (3 * a + b) / 4, (a + 3 * b) / 4)
    raise MalformedSpec(f"unknown rule {name!r}; expected one of {', '.join(RULE_NAMES)}")


def build_rule(T: TimeScale, a: float | None, b: float | None, rule, snap: bool = False) -> RuleBuild:
    """Partition for a named rule; with ``snap`` required points move to the nearest scale point."""
    if isinstance(rule, str):
        rule = {"rule": rule}
    if not isinstance(rule, dict) or "rule" not in rule:
        raise MalformedSpec("rule spec must be an object with a 'rule' field")
    if rule["rule"] == "custom":
        try:
            xs, alphas = list(rule["xs"]), list(rule["alphas"])
        except (KeyError, TypeError) as exc:
            raise MalformedSpec("custom rule needs 'xs' and 'alphas' lists") from exc
        xs_l = [(f"x_{i}", float(v)) for i, v in enumerate(xs)]
        al_l = [(f"alpha_{i}", float(v)) for i, v in enumerate(alphas)]
    else:
        a = T.min if a is None else a
        b = T.max if b is None else b
        for label, v in (("a", a), ("b", b)):
            if not T.contains(v, 1e-12):
                raise MembershipViolation(f"{label} = {v!r} is not a point of the time scale")
        a, b = T.snap(a), T.snap(b)
        if not a < b:
            raise OrderViolation("rules need a < b")
        try:
            xs_l, al_l = _rule_points(rule, a, b)
        except KeyError as exc:
            raise MalformedSpec(f"rule {rule['rule']!r} is missing parameter {exc}") from exc

    relocated = []

    def place(label, v):
        try:
            return T.snap(v)
        except NotInScale:
            if not snap:
                raise MembershipViolation(
                    f"rule {rule['rule']!r} needs {label} = {v!r}, which is not a point of the time scale"
                ) from None
        w = T.nearest(v)
        relocated.append({"point": label, "requested": v, "used": w})
        return w

    xs_v = tuple(place(lbl, v) for lbl, v in xs_l)
    al_v = tuple(place(lbl, v) for lbl, v in al_l)
    return RuleBuild(Partition(T, xs_v, al_v), relocated)


def make_rule(T: TimeScale, a: float | None, b: float | None, rule) -> Partition:
    return build_rule(T, a, b, rule).partition


def closed_form_bound(p: Partition, M: float) -> float:
    """Bound written in the continuous (ℝ) or unit-integer (ℤ) closed form.

    ℝ:  M (¼ Σ (x_{i+1} − x_i)² + Σ (α_{i+1} − m_i)²)
    ℤ:  M (¼ Σ (x_{i+1} − x_i)² + Σ (α_{i+1} − m_i)² + Σ (α_{i+1} − m_i))
    where m_i is the midpoint of [x_i, x_{i+1}].
    """
    fam = p.scale.family
    if fam.name == "continuous":
        linear_term = False
    elif fam.unit_integer:
        linear_term = True
    else:
        raise WrongScaleKind(f"closed form bound needs a continuous or unit-integer scale, not {fam.name}")
    xs = [Fraction(x) for x in p.xs]
    al = [Fraction(v) for v in p.alphas]
    total = Fraction(0)
    for i in range(p.k):
        mid = (xs[i] + xs[i + 1]) / 2
        off = al[i + 1] - mid
        total += (xs[i + 1] - xs[i]) ** 2 / 4 + off**2
        if linear_term:
            total += off
    return float(M) * float(total)
