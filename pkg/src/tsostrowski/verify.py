"""Seeded randomized checks of the Montgomery identity and the Ostrowski bound.

Every trial draws its own generator from ``SeedSequence([seed, index])``,
so results do not depend on trial order or on how trials are spread over
worker processes.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import timescale as ts
from .calculus import DEFAULT_SETTINGS
from .errors import Degenerate, TimeScaleError
from .funcspec import ExprFunc, parse_expr, polynomial
from .ostrowski import (
    Partition,
    closed_form_bound,
    evaluate_rule,
    montgomery_residual,
    partition,
)
from .timescale import TimeScale

GENERATOR = "numpy-PCG64/SeedSequence(seed,trial)/v1"
FAMILIES = ("continuous", "integers", "hgrid", "qlattice", "mixed")
FAMILY_WEIGHTS = (0.15, 0.15, 0.1, 0.1, 0.5)
WINDOW = (-2.0, 2.0)
GRID = 256  # mixed-scale breakpoints lie on a 1/GRID lattice inside WINDOW


@dataclass(frozen=True)
class VerifyConfig:
    seed: int
    trials: int = 1000
    max_segments: int = 6
    max_k: int = 5
    max_poly_degree: int = 6
    identity_tol: float = 1e-9
    discrete_identity_tol: float = 1e-12
    inequality_tol: float = 1e-9
    closed_form_tol: float = 1e-12
    transcendental: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.max_segments < 1 or self.max_k < 1 or self.max_poly_degree < 0:
            raise ValueError("max_segments and max_k must be >= 1, max_poly_degree >= 0")
        for name in ("identity_tol", "discrete_identity_tol", "inequality_tol", "closed_form_tol"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive")


def trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), index]))


def random_timescale(rng: np.random.Generator, max_segments: int, family: str | None = None) -> TimeScale:
    if family is None:
        family = FAMILIES[rng.choice(len(FAMILIES), p=FAMILY_WEIGHTS)]
    # grids count one segment per point, so their length is capped by max_segments
    steps = max_segments - 1
    if family == "continuous" or (family != "mixed" and steps < 1):
        a = float(rng.uniform(-2.0, 1.0))
        return ts.continuous(a, a + float(rng.uniform(0.25, 2.0)))
    if family == "integers":
        a = int(rng.integers(-3, 3))
        return ts.integers(a, a + int(rng.integers(1, min(6, steps) + 1)))
    if family == "hgrid":
        h = float(rng.choice([0.25, 0.5]))
        i0 = int(rng.integers(-6, 3))
        return ts.hgrid(i0 * h, (i0 + int(rng.integers(1, min(8, steps) + 1))) * h, h)
    if family == "qlattice":
        q = float(rng.choice([1.5, 2.0]))
        m = int(rng.integers(0, 2))
        return ts.qlattice(q, m, m + int(rng.integers(1, min(3, steps) + 1)))
    if family != "mixed":
        raise ValueError(f"unknown family {family!r}")
    nseg = int(rng.integers(1, max_segments + 1))
    lo, hi = (int(w * GRID) for w in WINDOW)
    cuts = np.sort(rng.choice(np.arange(lo, hi + 1), size=2 * nseg, replace=False)) / GRID
    segs = []
    for j in range(nseg):
        left, right = float(cuts[2 * j]), float(cuts[2 * j + 1])
        if rng.random() < 0.4:
            right = left
        segs.append((left, right))
    if len(segs) == 1 and segs[0][0] == segs[0][1]:
        segs = [(float(cuts[0]), float(cuts[1]))]
    return ts.from_segments(segs)


def random_point(T: TimeScale, lo: float, hi: float, rng: np.random.Generator) -> float:
    """A point of T ∩ [lo, hi]; segment endpoints are favoured."""
    pieces = []
    for left, right in T.segments:
        c, d = max(left, lo), min(right, hi)
        if c <= d:
            pieces.append((c, d))
    c, d = pieces[int(rng.integers(len(pieces)))]
    if c == d:
        return c
    u = rng.random()
    if u < 0.15:
        return c
    if u < 0.3:
        return d
    return float(rng.uniform(c, d))


def random_partition(T: TimeScale, max_k: int, rng: np.random.Generator) -> Partition:
    k = int(rng.integers(1, max_k + 1))
    while k >= 1:
        try:
            return _try_partition(T, k, rng)
        except Degenerate:
            k -= 1
    raise AssertionError("k = 1 always admits a partition")


def _try_partition(T: TimeScale, k: int, rng: np.random.Generator, attempts: int = 50) -> Partition:
    a, b = T.min, T.max
    interior: set[float] = set()
    for _ in range(attempts):
        if len(interior) == k - 1:
            break
        x = random_point(T, a, b, rng)
        if a < x < b:
            interior.add(x)
    if len(interior) != k - 1:
        raise Degenerate(f"could not place {k - 1} distinct interior points")
    xs = [a, *sorted(interior), b]
    alphas = [a] + [random_point(T, xs[i], xs[i + 1], rng) for i in range(k)] + [b]
    return partition(T, xs, alphas)


def random_function(rng: np.random.Generator, max_degree: int, transcendental: bool = False) -> ExprFunc:
    deg = int(rng.integers(0, max_degree + 1))
    poly = polynomial(rng.uniform(-3.0, 3.0, size=deg + 1).tolist())
    if not transcendental:
        return poly
    c1, c2 = rng.uniform(-2.0, 2.0, size=2).tolist()
    w1, w2 = rng.uniform(-1.5, 1.5, size=2).tolist()
    return parse_expr(f"{poly.text} + ({c1!r})*sin(({w1!r})*t) + ({c2!r})*exp(({w2!r})*t)")


@dataclass
class TrialResult:
    index: int
    family: str
    discrete: bool
    k: int
    residual: float | None = None
    excess: float | None = None
    tightness: float | None = None
    closed_form_diff: float | None = None
    error: str | None = None


def run_trial(config: VerifyConfig, index: int) -> TrialResult:
    rng = trial_rng(config.seed, index)
    T = random_timescale(rng, config.max_segments)
    p = random_partition(T, config.max_k, rng)
    f = random_function(rng, config.max_poly_degree, config.transcendental)
    fam = T.family
    label = "integers" if fam.unit_integer else fam.name
    out = TrialResult(index, label, T.is_discrete, p.k)
    try:
        out.residual = abs(montgomery_residual(p, f, DEFAULT_SETTINGS))
        rep = evaluate_rule(p, f, DEFAULT_SETTINGS)
        out.excess = rep.abs_error - rep.bound
        out.tightness = rep.tightness
        if fam.name == "continuous" or fam.unit_integer:
            out.closed_form_diff = abs(closed_form_bound(p, rep.m_used) - rep.bound)
    except TimeScaleError as exc:
        out.error = f"{exc.kind}: {exc}"
    return out


def _run_trial_args(args):
    return run_trial(*args)


SHARPNESS_SCALES = (
    ("continuous [0,1]", lambda: ts.continuous(0, 1)),
    ("integers [0,2]", lambda: ts.integers(0, 2)),
    ("integers [0,5]", lambda: ts.integers(0, 5)),
    ("integers [0,10]", lambda: ts.integers(0, 10)),
    ("qlattice q=2 m=0 n=3", lambda: ts.qlattice(2, 0, 3)),
    ("mixed [0,1]∪{2}∪[3,4]", lambda: ts.from_segments([[0, 1], [2, 2], [3, 4]])),
)


def sharpness_suite(tol: float = 1e-9) -> list[dict]:
    """f(t) = t with xs = (a, b) and alphas = (a, b, b): error and bound coincide."""
    f = parse_expr("t")
    results = []
    for name, make in SHARPNESS_SCALES:
        T = make()
        a, b = T.min, T.max
        rep = evaluate_rule(partition(T, (a, b), (a, b, b)), f)
        gap = abs(rep.abs_error - rep.bound)
        rel = gap / rep.bound if rep.bound > 0 else gap
        results.append({
            "scale": name,
            "segments": T.describe(),
            "abs_error": rep.abs_error,
            "bound": rep.bound,
            "gap": gap,
            "relative_gap": rel,
            "ok": rel <= tol,
        })
    return results


@dataclass
class VerifyReport:
    seed: int
    generator: str
    config: dict
    trials_run: int
    identity_failures: int
    inequality_failures: int
    closed_form_checks: int
    closed_form_failures: int
    trial_errors: int
    max_identity_residual: float
    max_identity_residual_discrete: float
    max_excess: float | None
    max_tightness: float | None
    family_counts: dict
    sharpness_results: list
    sharpness_failures: int
    failed_trials: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False, allow_nan=False)

    @property
    def ok(self) -> bool:
        return not (self.identity_failures or self.inequality_failures or self.closed_form_failures
                    or self.trial_errors or self.sharpness_failures)


def run_verification(config: VerifyConfig, jobs: int = 1) -> VerifyReport:
    work = [(config, i) for i in range(config.trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_trial_args, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        results = [run_trial(c, i) for c, i in work]

    id_fail = ineq_fail = cf_checks = cf_fail = errors = 0
    max_res = max_res_discrete = 0.0
    excesses, tights = [], []
    families = {name: 0 for name in FAMILIES}
    failed = []
    for r in results:
        families[r.family] += 1
        if r.error is not None:
            errors += 1
            failed.append({"trial": r.index, "reason": r.error})
            continue
        tol = config.discrete_identity_tol if r.discrete else config.identity_tol
        if r.residual > tol:
            id_fail += 1
            failed.append({"trial": r.index, "reason": f"identity residual {r.residual!r}"})
        max_res = max(max_res, r.residual)
        if r.discrete:
            max_res_discrete = max(max_res_discrete, r.residual)
        if r.excess > config.inequality_tol:
            ineq_fail += 1
            failed.append({"trial": r.index, "reason": f"error exceeds bound by {r.excess!r}"})
        excesses.append(r.excess)
        tights.append(r.tightness)
        if r.closed_form_diff is not None:
            cf_checks += 1
            if r.closed_form_diff > config.closed_form_tol:
                cf_fail += 1
                failed.append({"trial": r.index, "reason": f"closed form differs by {r.closed_form_diff!r}"})

    sharp = sharpness_suite()
    return VerifyReport(
        seed=config.seed,
        generator=GENERATOR,
        config=asdict(config),
        trials_run=len(results),
        identity_failures=id_fail,
        inequality_failures=ineq_fail,
        closed_form_checks=cf_checks,
        closed_form_failures=cf_fail,
        trial_errors=errors,
        max_identity_residual=max_res,
        max_identity_residual_discrete=max_res_discrete,
        max_excess=max(excesses) if excesses else None,
        max_tightness=max(tights) if tights else None,
        family_counts=families,
        sharpness_results=sharp,
        sharpness_failures=sum(not s["ok"] for s in sharp),
        failed_trials=failed,
    )
