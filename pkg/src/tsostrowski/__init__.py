"""Calculus on bounded time scales and k-point Ostrowski quadrature bounds."""

__version__ = "0.1.0"

from .calculus import (
    QuadratureSettings,
    delta_derivative,
    delta_integral,
    delta_integral_sigma,
    monomial_h,
)
from .funcspec import ExprFunc, diff_expr, eval_expr, parse_expr
from .ostrowski import (
    Partition,
    QuadReport,
    closed_form_bound,
    error_bound,
    evaluate_rule,
    kernel_K,
    make_rule,
    montgomery_residual,
    partition,
    quadrature,
    sup_delta_derivative,
)
from .timescale import TimeScale, make_timescale
from .verify import VerifyConfig, VerifyReport, run_verification

__all__ = [
    "ExprFunc", "Partition", "QuadReport", "QuadratureSettings", "TimeScale",
    "VerifyConfig", "VerifyReport", "closed_form_bound", "delta_derivative",
    "delta_integral", "delta_integral_sigma", "diff_expr", "error_bound",
    "eval_expr", "evaluate_rule", "kernel_K", "make_rule", "make_timescale",
    "monomial_h", "montgomery_residual", "parse_expr", "partition", "quadrature",
    "run_verification", "sup_delta_derivative",
]
