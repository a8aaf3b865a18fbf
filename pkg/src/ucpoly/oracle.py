"""Ground truth by enumeration: integer patterns, fiber vertices, extreme points.

The binary part (y, u) of a feasible point is swept exhaustively against the
logic rows; for each y the polytope of feasible x is enumerated exactly. Since
binary vectors are vertices of the unit cube, a point with binary (y, u) can
only be a convex combination of points sharing that (y, u), so the union of
all fiber vertices contains every extreme point of the hull.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .formulation import (Variant, lower_bound_rows, minupdown_rows, ramp_down_rows,
                          ramp_up_rows, upper_bound_rows)
from .model import Point, Regime, UCInstance, derive_constants
from .polycore import LPResult, dd_enumerate, in_convex_hull

DEFAULT_CAP = 7


class OracleCapError(ValueError):
    pass


@dataclass(frozen=True)
class BinaryPattern:
    y: tuple
    u: tuple   # u_2..u_T

    def values(self) -> tuple:
        return tuple(Fraction(v) for v in self.y + self.u)


@dataclass(frozen=True)
class OnlineIntervalProfile:
    T: int
    intervals: tuple   # ((start, end), ...) 1-based, inclusive

    @property
    def R(self) -> int:
        return len(self.intervals)


@dataclass
class CandidateSet:
    points: list
    provenance: list   # (BinaryPattern, vertex index within its fiber)


def _check_cap(inst: UCInstance, cap: int | None):
    cap = DEFAULT_CAP if cap is None else cap
    if inst.T > cap:
        raise OracleCapError(f"T={inst.T} exceeds the enumeration cap {cap} (raise it with cap=...)")


def online_intervals(y: Sequence[int]) -> OnlineIntervalProfile:
    out, start = [], None
    for t, v in enumerate(y, start=1):
        if v and start is None:
            start = t
        if not v and start is not None:
            out.append((start, t - 1))
            start = None
    if start is not None:
        out.append((start, len(y)))
    return OnlineIntervalProfile(len(y), tuple(out))


def enumerate_patterns(inst: UCInstance, cap: int | None = None) -> list[BinaryPattern]:
    """Every binary (y, u) satisfying the minimum-up/-down and start-up rows."""
    _check_cap(inst, cap)
    return list(_patterns(inst))


@functools.lru_cache(maxsize=64)
def _patterns(inst: UCInstance) -> tuple:
    T = inst.T
    rows = minupdown_rows(inst)
    out = []
    for bits in itertools.product((0, 1), repeat=2 * T - 1):
        vals = [0] * T + list(bits)
        if all(sum(c * vals[v] for v, c in r.coeffs.items()) <= r.rhs for r in rows):
            out.append(BinaryPattern(tuple(bits[:T]), tuple(bits[T:])))
    return tuple(out)


def _fiber_rows(inst: UCInstance, y: tuple, variant: Variant):
    rows = lower_bound_rows(inst) + upper_bound_rows(inst)
    if variant is not Variant.P_DOWN:
        rows += ramp_up_rows(inst)
    if variant is not Variant.P_UP:
        rows += ramp_down_rows(inst)
    T = inst.T
    out = []
    for r in rows:
        coeffs, rhs = {}, r.rhs
        for v, c in r.coeffs.items():
            if v < T:
                coeffs[v] = c
            else:
                rhs -= c * y[v - T]
        out.append((coeffs, rhs))
    out += [({t: Fraction(-1)}, Fraction(0)) for t in range(T)]   # x >= 0
    return out


@functools.lru_cache(maxsize=4096)
def _fiber_x(inst: UCInstance, y: tuple, variant: Variant) -> tuple:
    vs = dd_enumerate((inst.T, _fiber_rows(inst, y, variant)))
    return tuple(vs.points)


def fiber_vertices(inst: UCInstance, pattern: BinaryPattern, variant=Variant.P_FULL) -> list[Point]:
    """Vertices of the x-polytope with (y, u) fixed, lifted to full points."""
    variant = Variant.parse(variant)
    return [Point(x + pattern.values()) for x in _fiber_x(inst, pattern.y, variant)]


def candidate_points(inst: UCInstance, variant=Variant.P_FULL, cap: int | None = None) -> CandidateSet:
    _check_cap(inst, cap)
    variant = Variant.parse(variant)
    pts, prov = [], []
    for pat in _patterns(inst):
        for k, p in enumerate(fiber_vertices(inst, pat, variant)):
            pts.append(p)
            prov.append((pat, k))
    return CandidateSet(pts, prov)


def extreme_points(cands: CandidateSet, method: str = "structural") -> list[Point]:
    """Extreme points of the convex hull of the candidates.

    Only candidates with the same binary part can take part in a convex
    combination, and each such group is the vertex set of a single fiber, so
    every candidate is extreme. ``method="structural"`` relies on that and only
    checks the grouping; ``method="lp"`` drops each candidate lying in the hull
    of the rest of its group (one exact LP per point).
    """
    groups: dict = {}
    for p, (pat, _) in zip(cands.points, cands.provenance):
        groups.setdefault(p.binary_part(), (set(), []))
        groups[p.binary_part()][0].add(pat)
        groups[p.binary_part()][1].append(p)
    if method == "structural":
        for pats, pts in groups.values():
            if len(pats) != 1 or len(set(pts)) != len(pts):
                raise ValueError("candidate group is not the vertex set of a single fiber")
        return list(cands.points)
    if method != "lp":
        raise ValueError(f"unknown method {method!r}")
    out = []
    for p in cands.points:
        others = [q for q in groups[p.binary_part()][1] if q != p]
        if others and in_convex_hull(p.values, [q.values for q in others])[0]:
            continue
        out.append(p)
    return out


@functools.lru_cache(maxsize=64)
def _extreme_cached(inst: UCInstance, variant: Variant, cap) -> tuple:
    return tuple(extreme_points(candidate_points(inst, variant, cap)))


def hull_vertices(inst: UCInstance, variant=Variant.P_FULL, cap: int | None = None) -> list[Point]:
    """All extreme points of conv(variant) (cached per instance)."""
    _check_cap(inst, cap)
    return list(_extreme_cached(inst, Variant.parse(variant), cap))


# ---------------------------------------------------------------------------
# closed-form characterizations


def _profiles_with_u(inst: UCInstance):
    for pat in _patterns(inst):
        yield pat, online_intervals(pat.y)


def k1_characterized_points(inst: UCInstance) -> list[Point]:
    """Points whose online start-up/shut-down periods sit at {Cmin, Vbar}, other
    online periods at {Cmin, Cmax}, and offline periods at 0.

    A period counts as a start-up (shut-down) boundary when the unit is
    offline just before (after) it; the first and last horizon periods are
    not boundaries on their own.
    """
    if inst.regime is not Regime.K1:
        raise ValueError(f"k1 characterization needs regime K1, instance is {inst.regime.value}")
    T = inst.T
    edge = (inst.Cmin, inst.Vbar)
    inner = (inst.Cmin, inst.Cmax)
    out, seen = [], set()
    for pat, prof in _profiles_with_u(inst):
        choices = []
        for t in range(1, T + 1):
            if not pat.y[t - 1]:
                choices.append((Fraction(0),))
                continue
            startup = t > 1 and not pat.y[t - 2]
            shutdown = t < T and not pat.y[t]
            choices.append(edge if startup or shutdown else inner)
        for x in itertools.product(*choices):
            p = Point(tuple(x) + pat.values())
            if p not in seen:
                seen.add(p)
                out.append(p)
    return out


def _tree_paths(inst: UCInstance, length: int, startup: bool) -> list[tuple]:
    """x-sequences for one online interval read off the scenario trees.

    Outside the start-up period the values are Cmin, Cmin + V, Vbar + V and
    Cmax. Cmin + V needs Cmin just before it or Cmax just after it, Vbar + V
    needs Vbar just before it, and every step respects the ramp-up limit. A
    start-up period takes Cmin or Vbar; an interval online from period 1 has
    no start-up period.
    """
    cmin, cmax, vbar, V = inst.Cmin, inst.Cmax, inst.Vbar, inst.V
    mid = tuple(dict.fromkeys((cmin, cmin + V, vbar + V, cmax)))
    first = (cmin, vbar) if startup else (cmin, cmin + V, cmax)
    paths = [(v,) for v in first]
    for _ in range(length - 1):
        paths = [p + (v,) for p in paths for v in mid if v - p[-1] <= V]
    out = []
    for p in paths:
        ok = True
        for k, v in enumerate(p):
            prev = p[k - 1] if k else None
            nxt = p[k + 1] if k + 1 < len(p) else None
            # with Vbar = Cmin the two middle levels coincide; either reading will do
            readings = []
            if v in (cmin, vbar, cmax):
                readings.append(True)
            if v == vbar + V:
                readings.append(prev == vbar)
            if v == cmin + V:
                readings.append(prev == cmin or nxt == cmax)
            if not any(readings):
                ok = False
                break
        if ok:
            out.append(p)
    return out


def scenario_tree_points_k2up(inst: UCInstance) -> list[Point]:
    """Points generated by the backward (online-from-start) and forward
    (start-up) scenario trees for the ramp-up polytope with Cmax = Cmin + 2V."""
    if inst.Cmax != inst.Cmin + 2 * inst.V:
        raise ValueError("scenario trees need Cmax = Cmin + 2V")
    T = inst.T
    out, seen = [], set()
    for pat, prof in _profiles_with_u(inst):
        per_interval = []
        for a, b in prof.intervals:
            paths = _tree_paths(inst, b - a + 1, startup=a > 1)
            per_interval.append([(a, p) for p in paths])
        for combo in itertools.product(*per_interval):
            x = [Fraction(0)] * T
            for a, vals in combo:
                x[a - 1: a - 1 + len(vals)] = vals
            p = Point(tuple(x) + pat.values())
            if p not in seen:
                seen.add(p)
                out.append(p)
    return out


def grid_check(points: Sequence[Point], inst: UCInstance) -> dict:
    """Every x-coordinate must lie in the finite grid of output levels."""
    grid = derive_constants(inst).grid
    bad = []
    for k, p in enumerate(points):
        for t, v in enumerate(p.x, start=1):
            if v not in grid:
                bad.append({"point": k, "t": t, "value": v})
    return {"ok": not bad, "checked": len(points), "violators": bad,
            "grid": sorted(grid)}


def oracle_optimize(inst: UCInstance, variant, objective: Mapping, cap: int | None = None) -> LPResult:
    """Maximize ``objective`` over the mixed-integer set by scanning extreme points."""
    pts = hull_vertices(inst, variant, cap)
    best, arg = None, None
    obj = {int(k): Fraction(v) for k, v in objective.items() if v}
    for p in pts:
        val = sum((c * p.values[k] for k, c in obj.items()), Fraction(0))
        if best is None or val > best:
            best, arg = val, p
    if best is None:
        return LPResult("infeasible")
    return LPResult("optimal", objective=best, solution=arg.values)
