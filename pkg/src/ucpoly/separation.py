"""Exact separation of the cut families at an arbitrary query point.

For the subset-indexed families the only S-dependent part of a member is a
telescoping sum  sum_i (gap to the chain neighbour) * w_i  with
w_i = y_i - sum_j u_{i-j}.  For fixed (t, m) the best S is therefore a
cheapest chain between two fixed endpoints, found by a quadratic dynamic
program. F9 also charges its first chain element q, so q is enumerated.
The finite families are separated by enumerating their members.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


from .cuts import (CutParamError, CutParams, FAMILIES, OutOfHorizon, f7_m_range, f8_m_range,
                   family_admissible, family_params, generate)
from .formulation import Variant
from .model import Point, Regime, UCInstance, format_rational, derive_constants

CHAIN_FAMILIES = ("F7", "F8", "F9")
FINITE_FAMILIES = ("F2", "F5", "F6U", "F6D", "F10")


@dataclass(frozen=True)
class SeparationResult:
    family: str
    params: CutParams | None
    violation: Fraction | None
    found: bool

    @property
    def sort_key(self):
        v = self.violation if self.violation is not None else Fraction(0)
        return (-v, FAMILIES.index(self.family), self.params.sort_key if self.params else ())

    def to_doc(self) -> dict:
        return {"family": self.family, "found": self.found,
                "violation": None if self.violation is None else format_rational(self.violation),
                "params": self.params.to_doc() if self.params else None,
                "tag": self.params.tag if self.params else None}


def _values(point) -> tuple:
    vals = point.values if isinstance(point, Point) else point
    return tuple(Fraction(v) for v in vals)


def _violation(inst: UCInstance, params: CutParams, vals) -> Fraction | None:
    try:
        return generate(inst, params).violation(vals)
    except OutOfHorizon:
        return None


def _w(inst: UCInstance, vals, i: int, jmax: int) -> Fraction:
    """Value of y_i - sum_{j=0}^{jmax} u_{i-j} at the query point."""
    sp = inst.space
    s = vals[sp.y(i)]
    for j in range(0, jmax + 1):
        s -= vals[sp.u(i - j)]
    return s


def _better(a, b) -> bool:
    """Chain candidates ``(cost, len, S)``: lower cost, then shorter, then lexicographic."""
    return b is None or (a[0], len(a[1]), a[1]) < (b[0], len(b[1]), b[1])


def _backward_best(lo: int, hi: int, w) -> dict:
    """Cheapest chains lo = c_0 < c_1 < ... < c_k = i, cost sum (c_r - c_{r-1}) w(c_r).

    Returns ``{i: (cost, interior elements)}`` for every lo < i <= hi.
    """
    best = {lo: (Fraction(0), ())}
    for i in range(lo + 1, hi + 1):
        cand = None
        for p in range(lo, i):
            c, S = best[p]
            S2 = S + ((p,) if p != lo else ())
            new = (c + (i - p) * w(i), S2)
            if _better(new, cand):
                cand = new
        best[i] = cand
    return best


def _forward_best(lo: int, hi: int, w) -> tuple:
    """Cheapest chain lo = c_0 < ... < c_k = hi with cost sum (c_{r+1} - c_r) w(c_r)."""
    best = {hi: (Fraction(0), ())}
    for i in range(hi - 1, lo - 1, -1):
        cand = None
        for n in range(i + 1, hi + 1):
            c, S = best[n]
            S2 = ((n,) if n != hi else ()) + S
            new = (c + (n - i) * w(i), S2)
            if _better(new, cand):
                cand = new
        best[i] = cand
    return best[lo]


def _chain_choice(inst: UCInstance, family: str, t: int, m: int, vals):
    """Best S (or S0) for fixed (t, m) as ``(S, rhs contribution)``.

    The contribution is the S-dependent part of the right-hand side divided
    by V (for F9 the q-term is included with its own weight); the member with
    the smallest contribution has the largest violation.
    """
    L, V = inst.L, inst.V
    if family == "F7":
        kappa = derive_constants(inst).kappa
        w = lambda i: _w(inst, vals, i, min(L - 1, i - 2, kappa))  # noqa: E731
        if m == 0:
            return (), Fraction(0)
        cost, S = _backward_best(t - m, t, w)[t]
        return S, cost
    if family == "F8":
        if m < L:
            return (), Fraction(0)
        delta = min(m, L - 1)
        w = lambda i: _w(inst, vals, i, delta)  # noqa: E731
        cost, S = _forward_best(t + L, t + m + 1, w)
        return S, cost
    if family == "F9":
        delta = min(L - 1, m - 1)
        w = lambda i: _w(inst, vals, i, delta)  # noqa: E731
        qw = (inst.Cmin + V - inst.Vbar) / V
        anchor = t - m + L
        if m <= L:
            return (), qw * w(t)
        best = None
        from_anchor = _backward_best(anchor, t, w)
        c, S = from_anchor[t]
        best = (c + qw * w(anchor), (anchor,) + S)
        for q in range(anchor + 1, t + 1):
            tail = _backward_best(q, t, w)
            c, S = tail[t] if q < t else (Fraction(0), ())
            head = (q,) if q < t else ()
            cand = ((q - anchor) * w(q) + c + qw * w(q), head + S)
            if _better(cand, best):
                best = cand
        return best[1], best[0]
    raise CutParamError(f"{family} is not a chain family")


def chain_ranges(inst: UCInstance, family: str):
    """The (t, m) pairs of a chain family."""
    T = inst.T
    if family == "F7":
        return [(t, m) for t in range(1, T + 1) for m in f7_m_range(inst, t)]
    if family == "F8":
        return [(t, m) for t in range(1, T + 1) for m in f8_m_range(inst, t)]
    if family == "F9":
        kappa = derive_constants(inst).kappa
        return [(t, m) for t in range(2, T + 1) for m in range(1, min(t - 1, kappa) + 1)]
    raise CutParamError(f"{family} is not a chain family")


def _chain_candidates(inst: UCInstance, family: str, vals, mmax: int | None = None):
    for t, m in chain_ranges(inst, family):
        if mmax is not None and m > mmax:
            continue
        S, _ = _chain_choice(inst, family, t, m, vals)
        params = CutParams(family, t, m, S)
        v = _violation(inst, params, vals)
        if v is not None:
            yield params, v


def _finite_candidates(inst: UCInstance, family: str, vals):
    for params in family_params(inst, family):
        v = _violation(inst, params, vals)
        if v is not None:
            yield params, v


def _pick(family: str, cands) -> SeparationResult:
    best = None
    for params, v in cands:
        if best is None or (-v, params.sort_key) < (-best[1], best[0].sort_key):
            best = (params, v)
    if best is None:
        return SeparationResult(family, None, None, False)
    return SeparationResult(family, best[0], best[1], best[1] > 0)


def separate_chain_family(inst: UCInstance, family: str, point, *, mmax: int | None = None
                          ) -> SeparationResult:
    """Most violated member of F7, F8 or F9 (exact)."""
    if family not in CHAIN_FAMILIES:
        raise CutParamError(f"{family} is not a chain family (use {', '.join(CHAIN_FAMILIES)})")
    vals = _values(point)
    return _pick(family, _chain_candidates(inst, family, vals, mmax))


def separate_finite_family(inst: UCInstance, family: str, point) -> SeparationResult:
    """Most violated member of F2, F5, F6U, F6D or F10 by enumeration."""
    if family not in FINITE_FAMILIES:
        raise CutParamError(f"{family} is not a finite family (use {', '.join(FINITE_FAMILIES)})")
    if not family_admissible(inst, family):
        raise CutParamError(f"{family} is not defined for regime {inst.regime.value}")
    return _pick(family, _finite_candidates(inst, family, _values(point)))


def separate_family(inst: UCInstance, family: str, point) -> SeparationResult:
    if family in CHAIN_FAMILIES:
        return separate_chain_family(inst, family, point)
    return separate_finite_family(inst, family, point)


def brute_force_separate(inst: UCInstance, family: str, point, *, t: int | None = None,
                         m: int | None = None, mmax: int | None = None) -> SeparationResult:
    """Reference separator: evaluate every member (optionally one (t, m))."""
    vals = _values(point)

    def cands():
        for params in family_params(inst, family):
            if (t is not None and params.t != t) or (m is not None and params.m != m):
                continue
            if mmax is not None and params.m > mmax:
                continue
            v = _violation(inst, params, vals)
            if v is not None:
                yield params, v
    return _pick(family, cands())


def chain_optimum(inst: UCInstance, family: str, point, t: int, m: int) -> Fraction | None:
    """Best violation for one (t, m) via the dynamic program."""
    vals = _values(point)
    S, _ = _chain_choice(inst, family, t, m, vals)
    return _violation(inst, CutParams(family, t, m, S), vals)


def default_families(inst: UCInstance, variant) -> tuple:
    """Families separated for each variant.

    F2, F5, F6U and F6D are valid for P only (they rely on both ramp limits),
    so P^U and P^D get their own families in every regime.
    """
    variant = Variant.parse(variant)
    reg = inst.regime
    if variant is Variant.P_UP:
        fams = ["F7", "F9"]
    elif variant is Variant.P_DOWN:
        fams = ["F8", "F10"]
    elif reg is Regime.K1:
        fams = ["F2"]
    elif reg is Regime.K2:
        fams = ["F5", "F6U", "F6D"]
    else:
        fams = ["F7", "F8", "F9", "F10"]
    return tuple(fams)


def separate_all(inst: UCInstance, variant, point, families=None) -> list[SeparationResult]:
    """Violated members, the most violated one per (family, t, m), sorted by
    violation (descending), then family, then parameters."""
    fams = default_families(inst, variant) if families is None else tuple(families)
    vals = _values(point)
    out = []
    for fam in fams:
        if fam in CHAIN_FAMILIES:
            cands = _chain_candidates(inst, fam, vals)
        else:
            if not family_admissible(inst, fam):
                continue
            cands = _finite_candidates(inst, fam, vals)
        groups: dict = {}
        for params, v in cands:
            if v > 0:
                groups.setdefault((params.t, params.m), []).append((params, v))
        out += [_pick(fam, g) for g in groups.values()]
    out.sort(key=lambda r: r.sort_key)
    return out
