"""Command-line interface.

Every subcommand prints one JSON document on stdout.  Domain errors print
``{"error": kind, "detail": message}`` on stderr and exit with status 1;
usage errors exit with status 2.  Floats are written in shortest
round-trip form.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .calculus import QuadratureSettings, monomial_h
from .errors import TimeScaleError
from .funcspec import parse_expr
from .ostrowski import (
    PARAMETER_FREE_RULES,
    RULE_NAMES,
    bound_factor,
    build_rule,
    closed_form_bound,
    evaluate_rule,
    montgomery_residual,
    sup_delta_derivative,
)
from .timescale import make_timescale
from .verify import VerifyConfig, run_verification


class UsageError(Exception):
    pass


def _json_arg(text: str, what: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--{what} is not valid JSON: {exc}") from None


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False)


def _settings(args) -> QuadratureSettings:
    return QuadratureSettings(args.abs_tol, args.rel_tol, args.max_subdivisions)


def _scale_and_rule(args):
    T = make_timescale(_json_arg(args.scale, "scale"))
    rule = _json_arg(args.rule, "rule")
    built = build_rule(T, args.a, args.b, rule, snap=args.snap)
    return T, rule, built


def _partition_block(built) -> dict:
    out = {"partition": built.partition.to_dict()}
    if built.relocated:
        out["snapped"] = built.relocated
    return out


def cmd_quad(args) -> dict:
    T, rule, built = _scale_and_rule(args)
    f = parse_expr(args.f)
    report = evaluate_rule(built.partition, f, _settings(args))
    return {
        "scale": T.describe(),
        "rule": rule,
        "f": f.text,
        **_partition_block(built),
        **report.to_dict(),
    }


def cmd_bound(args) -> dict:
    T, rule, built = _scale_and_rule(args)
    p = built.partition
    if args.M is not None:
        m, m_source = args.M, "given"
    elif args.f is not None:
        m, m_source = sup_delta_derivative(T, parse_expr(args.f), p.a, p.b), "sup |f^Δ|"
    else:
        raise UsageError("bound needs --M or --f")
    out = {
        "scale": T.describe(),
        "rule": rule,
        **_partition_block(built),
        "M": m,
        "M_source": m_source,
        "h2_sum": float(bound_factor(p)),
        "bound": m * float(bound_factor(p)),
    }
    try:
        out["closed_form_bound"] = closed_form_bound(p, m)
    except TimeScaleError:
        out["closed_form_bound"] = None
    return out


def cmd_identity(args) -> dict:
    T, rule, built = _scale_and_rule(args)
    f = parse_expr(args.f)
    res = montgomery_residual(built.partition, f, _settings(args))
    return {"scale": T.describe(), "rule": rule, "f": f.text, **_partition_block(built), "residual": res}


def cmd_monomial(args) -> dict:
    T = make_timescale(_json_arg(args.scale, "scale"))
    value = monomial_h(T, args.k, args.t, args.s, _settings(args))
    return {"k": args.k, "t": args.t, "s": args.s, "value": value}


def cmd_verify(args) -> dict:
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    try:
        config = VerifyConfig(
            seed=args.seed,
            trials=args.trials,
            max_segments=args.max_segments,
            max_k=args.max_k,
            max_poly_degree=args.max_degree,
            identity_tol=args.identity_tol,
            inequality_tol=args.inequality_tol,
            transcendental=args.transcendental,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return run_verification(config, jobs=args.jobs).to_dict()


def cmd_rules(args) -> dict:
    T = make_timescale(_json_arg(args.scale, "scale"))
    rules = {}
    for name in PARAMETER_FREE_RULES:
        try:
            built = build_rule(T, args.a, args.b, {"rule": name}, snap=args.snap)
            rules[name] = _partition_block(built)
        except TimeScaleError as exc:
            rules[name] = {"error": exc.kind, "detail": str(exc)}
    return {
        "scale": T.describe(),
        "rules": rules,
        "parametrized": {
            "rectangle": ["alpha"],
            "three_point": ["x", "alpha1", "alpha2"],
            "ostrowski_point": ["x"],
            "simpson": ["x (optional)"],
            "custom": ["xs", "alphas"],
        },
        "all_rules": list(RULE_NAMES),
    }


COMMANDS = {
    "quad": cmd_quad,
    "bound": cmd_bound,
    "identity": cmd_identity,
    "monomial": cmd_monomial,
    "verify": cmd_verify,
    "rules": cmd_rules,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsostrowski",
        description="Time-scale calculus and k-point Ostrowski quadrature bounds.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, rule=True, f=True, f_required=True):
        p.add_argument("--scale", required=True, help='scale JSON, e.g. \'{"kind":"integers","a":0,"b":3}\'')
        if rule:
            p.add_argument("--rule", required=True, help='rule JSON, e.g. \'{"rule":"simpson"}\'')
            p.add_argument("--a", type=float, default=None, help="left end (default: scale minimum)")
            p.add_argument("--b", type=float, default=None, help="right end (default: scale maximum)")
            p.add_argument("--snap", action="store_true",
                           help="move required points that miss the scale to the nearest scale point")
        if f:
            p.add_argument("--f", required=f_required, help='integrand expression in t, e.g. "t^2 + 3*t"')
        p.add_argument("--abs-tol", type=float, default=1e-10)
        p.add_argument("--rel-tol", type=float, default=1e-10)
        p.add_argument("--max-subdivisions", type=int, default=10_000)

    common(sub.add_parser("quad", help="evaluate a rule: value, Δ-integral of f^σ, error and bound"))
    p = sub.add_parser("bound", help="Ostrowski bound for a rule, from --M or from f")
    common(p, f_required=False)
    p.add_argument("--M", type=float, default=None, help="bound on |f^Δ|")
    common(sub.add_parser("identity", help="Montgomery identity residual"))
    p = sub.add_parser("monomial", help="generalized monomial h_k(t, s)")
    common(p, rule=False, f=False)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p = sub.add_parser("verify", help="seeded randomized verification report")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--max-segments", type=int, default=6)
    p.add_argument("--max-k", type=int, default=5)
    p.add_argument("--max-degree", type=int, default=6)
    p.add_argument("--identity-tol", type=float, default=1e-9)
    p.add_argument("--inequality-tol", type=float, default=1e-9)
    p.add_argument("--transcendental", action="store_true", help="add sin/exp terms to the random integrands")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p = sub.add_parser("rules", help="list the named rules and their partitions on a scale")
    p.add_argument("--scale", required=True)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--snap", action="store_true")
    return parser


def _stdin_argv(argv: list[str]) -> list[str]:
    """Expand ``--stdin``: flags come from a JSON object on standard input."""
    argv = [a for a in argv if a != "--stdin"]
    payload = json.load(sys.stdin)
    if not isinstance(payload, dict):
        raise UsageError("--stdin expects a JSON object of flags")
    for key, value in payload.items():
        flag = "--" + key.replace("_", "-") if len(key) > 1 else "--" + key
        if value is True:
            argv.append(flag)
        elif value is False or value is None:
            continue
        else:
            argv += [flag, value if isinstance(value, str) else json.dumps(value)]
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if "--stdin" in argv:
            argv = _stdin_argv(argv)
    except (UsageError, json.JSONDecodeError) as exc:
        print(_dump({"error": "UsageError", "detail": str(exc)}), file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        result = COMMANDS[args.command](args)
    except UsageError as exc:
        print(_dump({"error": "UsageError", "detail": str(exc)}), file=sys.stderr)
        return 2
    except TimeScaleError as exc:
        print(_dump({"error": exc.kind, "detail": str(exc)}), file=sys.stderr)
        return 1
    except ValueError as exc:
        print(_dump({"error": "ValueError", "detail": str(exc)}), file=sys.stderr)
        return 1
    text = _dump(result)
    out = getattr(args, "out", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
