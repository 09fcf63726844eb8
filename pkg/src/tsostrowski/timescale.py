"""Bounded time scales as finite unions of closed segments.

A scale is stored as an ordered tuple of disjoint closed segments
``(left, right)``; a degenerate segment ``left == right`` is an isolated
point.  All jump-operator queries reduce to a binary search over the
segment left endpoints.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, NamedTuple

from .errors import EmptyScale, MalformedSpec, NotInScale

MEMBERSHIP_TOL = 1e-12


class Jumps(NamedTuple):
    sigma: float
    rho: float
    mu: float
    nu: float


class PointClass(NamedTuple):
    right_dense: bool
    right_scattered: bool
    left_dense: bool
    left_scattered: bool

    @property
    def isolated(self) -> bool:
        return self.right_scattered and self.left_scattered

    @property
    def dense(self) -> bool:
        return self.right_dense and self.left_dense


class Family(NamedTuple):
    """Canonical family a scale belongs to, inferred from its segments.

    ``name`` is one of ``continuous``, ``hgrid``, ``qlattice`` or ``mixed``;
    ``step`` is the grid spacing or lattice ratio where that applies.
    """

    name: str
    step: float | None = None

    @property
    def unit_integer(self) -> bool:
        return self.name == "hgrid" and self.step == 1.0


class Dense(NamedTuple):
    left: float
    right: float


class Jump(NamedTuple):
    t: float
    sigma: float


@dataclass(frozen=True)
class TimeScale:
    segments: tuple[tuple[float, float], ...]

    def __post_init__(self):
        segs = self.segments
        if not segs:
            raise EmptyScale("time scale has no points")
        for left, right in segs:
            if not (math.isfinite(left) and math.isfinite(right)) or left > right:
                raise MalformedSpec(f"bad segment ({left}, {right})")
        for (_, r0), (l1, _) in zip(segs, segs[1:]):
            if not r0 < l1:
                raise MalformedSpec("segments must be ordered and strictly separated")
        if not segs[0][0] < segs[-1][1]:
            raise MalformedSpec("a time scale needs at least two points")

    @property
    def min(self) -> float:
        return self.segments[0][0]

    @property
    def max(self) -> float:
        return self.segments[-1][1]

    @cached_property
    def _lefts(self) -> list[float]:
        return [s[0] for s in self.segments]

    @property
    def is_discrete(self) -> bool:
        return all(left == right for left, right in self.segments)

    def _index(self, t: float) -> int:
        """Index of the segment whose left endpoint is the last one <= t (or 0)."""
        return max(bisect.bisect_right(self._lefts, t) - 1, 0)

    def snap(self, t: float, tol: float = MEMBERSHIP_TOL) -> float:
        """Return the scale point within ``tol`` of ``t``; raise NotInScale otherwise."""
        t = float(t)
        i = self._index(t)
        best = None
        for j in (i - 1, i, i + 1):
            if 0 <= j < len(self.segments):
                left, right = self.segments[j]
                if left <= t <= right:
                    return t
                cand = left if t < left else right
                if best is None or abs(cand - t) < abs(best - t):
                    best = cand
        if best is not None and abs(best - t) <= tol:
            return best
        raise NotInScale(f"{t!r} is not a point of the time scale")

    def contains(self, t: float, tol: float = 0.0) -> bool:
        try:
            self.snap(t, tol)
        except NotInScale:
            return False
        return True

    def nearest(self, t: float) -> float:
        """Nearest scale point to ``t``, with no distance limit."""
        return self.snap(t, math.inf)

    def jump_operators(self, t: float, tol: float = MEMBERSHIP_TOL) -> Jumps:
        t = self.snap(t, tol)
        i = self._index(t)
        left, right = self.segments[i]
        if t < right or i == len(self.segments) - 1:
            sigma = t
        else:
            sigma = self.segments[i + 1][0]
        if t > left or i == 0:
            rho = t
        else:
            rho = self.segments[i - 1][1]
        return Jumps(sigma, rho, sigma - t, t - rho)

    def sigma(self, t: float) -> float:
        return self.jump_operators(t).sigma

    def rho(self, t: float) -> float:
        return self.jump_operators(t).rho

    def classify(self, t: float, tol: float = MEMBERSHIP_TOL) -> PointClass:
        j = self.jump_operators(t, tol)
        rs, ls = j.mu > 0, j.nu > 0
        return PointClass(not rs, rs, not ls, ls)

    def in_kappa(self, t: float, tol: float = MEMBERSHIP_TOL) -> bool:
        t = self.snap(t, tol)
        if t != self.max:
            return True
        return self.jump_operators(t).nu == 0

    def pieces(self, a: float, b: float) -> Iterator[Dense | Jump]:
        """Decompose ``[a, b] ∩ T`` for Δ-integration.

        Yields ``Dense(c, d)`` for each maximal non-degenerate continuous
        piece and ``Jump(t, σ(t))`` for each right-scattered ``t`` in
        ``[a, b)``.  Requires ``a <= b``, both already members.
        """
        if a >= b:
            return
        i = self._index(a)
        n = len(self.segments)
        while i < n:
            left, right = self.segments[i]
            c, d = max(left, a), min(right, b)
            if d > c:
                yield Dense(c, d)
            if d >= b:
                return
            # d == right < b, so the segment end is right-scattered
            yield Jump(right, self.segments[i + 1][0])
            i += 1

    def right_scattered_points(self, a: float, b: float) -> list[float]:
        return [p.t for p in self.pieces(a, b) if isinstance(p, Jump)]

    @cached_property
    def family(self) -> Family:
        segs = self.segments
        if len(segs) == 1:
            return Family("continuous")
        if not self.is_discrete:
            return Family("mixed")
        pts = [s[0] for s in segs]
        diffs = [q - p for p, q in zip(pts, pts[1:])]
        h = diffs[0]
        if all(math.isclose(d, h, rel_tol=1e-12, abs_tol=0.0) for d in diffs):
            if h == 1.0 and all(p == int(p) for p in pts):
                return Family("hgrid", 1.0)
            return Family("hgrid", h)
        if pts[0] > 0:
            q = pts[1] / pts[0]
            ratios = [b / a for a, b in zip(pts, pts[1:])]
            if q > 1 and all(math.isclose(r, q, rel_tol=1e-12) for r in ratios):
                return Family("qlattice", q)
        return Family("mixed")

    def describe(self) -> str:
        parts = []
        for left, right in self.segments:
            parts.append(f"{{{_fmt(left)}}}" if left == right else f"[{_fmt(left)},{_fmt(right)}]")
        if len(parts) > 8:
            parts = parts[:3] + ["..."] + parts[-2:]
        return "∪".join(parts)

    def to_spec(self) -> dict:
        return {"kind": "segments", "segments": [[l, r] for l, r in self.segments]}


def _fmt(x: float) -> str:
    return repr(int(x)) if x == int(x) else repr(x)


def normalize_segments(segments) -> tuple[tuple[float, float], ...]:
    segs = []
    for seg in segments:
        try:
            left, right = (float(v) for v in seg)
        except (TypeError, ValueError) as exc:
            raise MalformedSpec(f"segment {seg!r} is not a (left, right) pair") from exc
        if left > right:
            raise MalformedSpec(f"segment ({left}, {right}) has left > right")
        segs.append((left, right))
    if not segs:
        raise EmptyScale("no segments given")
    segs.sort()
    merged = [segs[0]]
    for left, right in segs[1:]:
        pl, pr = merged[-1]
        if left < pr:
            raise MalformedSpec(f"segments ({pl}, {pr}) and ({left}, {right}) overlap")
        if left == pr:
            merged[-1] = (pl, max(pr, right))
        else:
            merged.append((left, right))
    return tuple(merged)


def from_segments(segments) -> TimeScale:
    return TimeScale(normalize_segments(segments))


def continuous(a: float, b: float) -> TimeScale:
    if not a < b:
        raise MalformedSpec("continuous scale needs a < b")
    return TimeScale(((float(a), float(b)),))


def hgrid(a: float, b: float, h: float) -> TimeScale:
    """Points of hℤ inside [a, b]."""
    if not h > 0:
        raise MalformedSpec("grid step h must be positive")
    if not a < b:
        raise MalformedSpec("grid needs a < b")
    lo = math.ceil(a / h - 1e-9)
    hi = math.floor(b / h + 1e-9)
    if hi < lo:
        raise EmptyScale(f"no multiple of {h} in [{a}, {b}]")
    return TimeScale(tuple((i * h, i * h) for i in range(lo, hi + 1)))


def integers(a: float, b: float) -> TimeScale:
    return hgrid(a, b, 1.0)


def qlattice(q: float, m: int, n: int) -> TimeScale:
    """The points q^m, q^(m+1), ..., q^n of q^ℕ₀."""
    if not q > 1:
        raise MalformedSpec("q-lattice needs q > 1")
    if int(m) != m or int(n) != n or m < 0:
        raise MalformedSpec("q-lattice exponents must be non-negative integers")
    if not m < n:
        raise MalformedSpec("q-lattice needs m < n")
    return TimeScale(tuple((float(q) ** j, float(q) ** j) for j in range(int(m), int(n) + 1)))


def make_timescale(spec) -> TimeScale:
    """Build a scale from its JSON description (a dict) or pass a TimeScale through."""
    if isinstance(spec, TimeScale):
        return spec
    if not isinstance(spec, dict) or "kind" not in spec:
        raise MalformedSpec("scale spec must be an object with a 'kind' field")
    kind = spec["kind"]
    try:
        if kind == "continuous":
            return continuous(spec["a"], spec["b"])
        if kind == "integers":
            return integers(spec["a"], spec["b"])
        if kind == "hgrid":
            return hgrid(spec["a"], spec["b"], spec["h"])
        if kind == "qlattice":
            return qlattice(spec["q"], spec["m"], spec["n"])
        if kind == "segments":
            return from_segments(spec["segments"])
    except KeyError as exc:
        raise MalformedSpec(f"scale spec of kind {kind!r} is missing {exc}") from exc
    except TypeError as exc:
        raise MalformedSpec(f"bad scale spec: {exc}") from exc
    raise MalformedSpec(f"unknown scale kind {kind!r}")
