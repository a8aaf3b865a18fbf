"""Strong valid inequality families and the hull descriptions built from them.

Family ids: F2 (V = Cmax - Cmin), F5/F6U/F6D (Cmax = Cmin + 2V, Vbar = Cmin),
F7/F9 (ramp-up polytope), F8/F10 (ramp-down polytope). Each generator takes
an instance plus the index data selecting one member and returns a
``LinearInequality`` in ``<=`` form.
"""

from __future__ import annotations

import contextlib
import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .formulation import (InequalitySystem, binary_ids, bound_rows, lower_bound_rows,
                          minupdown_rows, u_nonneg_rows)
from .model import (LinExpr, LinearInequality, Regime, UCInstance, derive_constants,
                    floor_div, pos)

log = logging.getLogger(__name__)

FAMILIES = ("F2", "F5", "F6U", "F6D", "F7", "F8", "F9", "F10")
CHAIN_FAMILIES = ("F7", "F8", "F9")
FINITE_FAMILIES = ("F2", "F5", "F6U", "F6D", "F10")
HULLS = ("Q_K1", "Q_K2", "Q_UP", "Q_DOWN")

# Terminal index of the forward chain in F5. The family is stated with
# d_i = min{a in S u {t+3} : a > i}; at t = T the summation index is T, not t+1.
# "t+3" extends that formula literally; "s+2" keeps the chain span at 2 by
# anchoring at min{t+1, T} + 2 (identical for every t < T).
F5_TERMINAL = "s+2"

# Upper limit of the start-up weights V * sum_j j u_{t-j} in F5: the stated
# min{L-1, t-2} ("L-1") or min{L-1-(s-t), t-2} with s = min{t+1, T}
# ("matched"), which stops at the last start-up that the chain term for s
# also subtracts.
F5_WEIGHTS = "matched"

# Upper limit j2 of the u-sum in F6D. "t-2" is the stated min{1, t-2, L-1};
# "t-1" lets the sum reach u_2 when t = 2 (the index t+1-i stays >= 2).
F6D_J2 = "t-1"

# Attachment point q of the (Cmin + V - Vbar) term in F10. Taken literally,
# q = t + L, which lies past t + m when m < L and the member is then not valid.
# "clamped" uses q = min{t + L, t + m}; "literal" keeps q = t + L.
F10_Q = "clamped"

READING_DEFAULTS = {"F5_TERMINAL": "s+2", "F5_WEIGHTS": "matched", "F6D_J2": "t-1", "F10_Q": "clamped"}
LITERAL_READINGS = {"F5_TERMINAL": "t+3", "F5_WEIGHTS": "L-1", "F6D_J2": "t-2", "F10_Q": "literal"}
_READING_CHOICES = {"F5_TERMINAL": ("t+3", "s+2"), "F5_WEIGHTS": ("L-1", "matched"),
                    "F6D_J2": ("t-2", "t-1"), "F10_Q": ("literal", "clamped")}


def current_readings() -> dict:
    g = globals()
    return {k: g[k] for k in READING_DEFAULTS}


@contextlib.contextmanager
def readings(**overrides):
    """Temporarily switch index readings, e.g. ``with readings(**LITERAL_READINGS):``."""
    for k, v in overrides.items():
        if k not in _READING_CHOICES or v not in _READING_CHOICES[k]:
            raise ValueError(f"unknown reading {k}={v!r}")
    g = globals()
    saved = current_readings()
    g.update(overrides)
    try:
        yield
    finally:
        g.update(saved)


class CutParamError(ValueError):
    """Index data outside the admissible range of a family, or wrong regime."""


class OutOfHorizon(Exception):
    """A member would reference a variable beyond the allowed horizon."""


@dataclass(frozen=True, order=True)
class CutParams:
    family: str
    t: int
    m: int = 0
    S: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "S", tuple(sorted(self.S)))
        if self.family not in FAMILIES:
            raise CutParamError(f"unknown family {self.family!r}")

    @property
    def sort_key(self):
        return (FAMILIES.index(self.family), self.t, self.m, len(self.S), self.S)

    @property
    def tag(self) -> str:
        parts = [f"t={self.t}"]
        if self.family in ("F7", "F8", "F9", "F10"):
            parts.append(f"m={self.m}")
        if self.family in ("F5", "F7", "F8", "F9"):
            parts.append("S={" + ",".join(map(str, self.S)) + "}")
        return f"{self.family}[{';'.join(parts)}]"

    def to_doc(self) -> dict:
        return {"family": self.family, "t": self.t, "m": self.m, "S": list(self.S)}

    @classmethod
    def from_doc(cls, doc) -> "CutParams":
        return cls(doc["family"], int(doc["t"]), int(doc.get("m", 0)), tuple(doc.get("S", ())))


class _Builder:
    """RHS accumulator with the index conventions shared by all families."""

    def __init__(self, inst: UCInstance, extended: bool = False):
        self.inst = inst
        self.sp = inst.space
        self.extended = extended   # y_{T+1} := y_T, u_{T+1} := 0
        self.e = LinExpr()

    def y(self, i: int, coef) -> None:
        if not coef:
            return
        T = self.inst.T
        if self.extended and i == T + 1:
            i = T
        if not 1 <= i <= T:
            raise OutOfHorizon(f"y_{i}")
        self.e.add(self.sp.y(i), coef)

    def u(self, i: int, coef) -> None:
        if not coef:
            return
        T = self.inst.T
        if self.extended and i == T + 1:
            return
        if not 2 <= i <= T:
            raise OutOfHorizon(f"u_{i}")
        self.e.add(self.sp.u(i), coef)

    def term(self, coef, i: int, jmax: int, jmin: int = 0) -> None:
        """coef * (y_i - sum_{j=jmin}^{jmax} u_{i-j}); an empty sum when jmax < jmin."""
        if not coef:
            return
        self.y(i, coef)
        for j in range(jmin, jmax + 1):
            self.u(i - j, -coef)

    def startup_weights(self, coef, t: int, jmax: int) -> None:
        """coef * sum_{j=0}^{jmax} j u_{t-j}."""
        for j in range(1, jmax + 1):
            self.u(t - j, coef * j)

    def row(self, lhs: dict, const, tag: str) -> LinearInequality:
        e = LinExpr()
        for v, c in lhs.items():
            e.add(v, c)
        e.add_expr(self.e, -1)
        return LinearInequality(e, Fraction(const), "<=", tag, self.sp.dim)


def backward_chain(members, anchor: int) -> dict:
    """d_i = max{a in members u {anchor} : a < i} for each member above the anchor."""
    pool = sorted(set(members) | {anchor})
    return {i: max(a for a in pool if a < i) for i in sorted(set(members)) if i > anchor}


def forward_chain(members, anchor: int) -> dict:
    """d_i = min{a in members u {anchor} : a > i} for each member below the anchor."""
    pool = sorted(set(members) | {anchor})
    return {i: min(a for a in pool if a > i) for i in sorted(set(members)) if i < anchor}


def _require_regime(inst: UCInstance, family: str, regime: Regime) -> None:
    if inst.regime is not regime:
        raise CutParamError(f"{family} needs regime {regime.value}, instance is {inst.regime.value}")


def _require_t(inst, family, t, lo, hi):
    if not lo <= t <= hi:
        raise CutParamError(f"{family}: t={t} outside [{lo}, {hi}]")


def _require_subset(family, S, lo, hi, name="S"):
    bad = [i for i in S if not lo <= i <= hi]
    if bad:
        raise CutParamError(f"{family}: {name} element(s) {bad} outside [{lo}, {hi}]")


# ---------------------------------------------------------------------------
# families


def gen_F2(inst: UCInstance, t: int) -> LinearInequality:
    """x_t <= Vbar y_t + (Cmax - Vbar)(y_s - sum_{i=0}^{j} u_{s-i})."""
    _require_regime(inst, "F2", Regime.K1)
    T, L = inst.T, inst.L
    _require_t(inst, "F2", t, 1, T)
    s = min(t + 1, T)
    j = min(1, L - 1, s - 2, s - t)
    b = _Builder(inst)
    b.y(t, inst.Vbar)
    b.term(inst.Cmax - inst.Vbar, s, j)
    return b.row({inst.space.x(t): 1}, 0, CutParams("F2", t).tag)


def gen_F5(inst: UCInstance, t: int, S=()) -> LinearInequality:
    _require_regime(inst, "F5", Regime.K2)
    T, L, V = inst.T, inst.L, inst.V
    _require_t(inst, "F5", t, 1, T)
    S = tuple(sorted(set(S)))
    if S not in ((), (min(t + 2, T),)):
        raise CutParamError(f"F5: S={set(S) or '{}'} must be empty or {{{min(t + 2, T)}}}")
    s = min(t + 1, T)
    terminal = t + 3 if F5_TERMINAL == "t+3" else s + 2
    members = set(S) | {s}
    d = forward_chain(members, terminal)
    b = _Builder(inst)
    b.y(t, inst.Vbar)
    for i in sorted(members):
        b.term(V * (d[i] - i), i, min(L - 1, i - 2))
    b.startup_weights(V, t, min(L - 1 if F5_WEIGHTS == "L-1" else L - 1 - (s - t), t - 2))
    return b.row({inst.space.x(t): 1}, 0, CutParams("F5", t, 0, S).tag)


def gen_F6U(inst: UCInstance, t: int) -> LinearInequality:
    """x_{t+1} - x_t <= Vbar y_{t+1} - Cmin y_t + V (y_s - sum_{i=0}^{j1} u_{s-i})."""
    _require_regime(inst, "F6U", Regime.K2)
    T, L = inst.T, inst.L
    _require_t(inst, "F6U", t, 1, T - 1)
    s = min(t + 2, T)
    j1 = min(s - 2, 1, L - 1, s - t - 1)
    b = _Builder(inst)
    b.y(t + 1, inst.Vbar)
    b.y(t, -inst.Cmin)
    b.term(inst.V, s, j1)
    sp = inst.space
    return b.row({sp.x(t + 1): 1, sp.x(t): -1}, 0, CutParams("F6U", t).tag)


def gen_F6D(inst: UCInstance, t: int) -> LinearInequality:
    """x_t - x_{t+1} <= Vbar y_t - Cmin y_{t+1} + V (y_{t+1} - sum_{i=0}^{j2} u_{t+1-i})."""
    _require_regime(inst, "F6D", Regime.K2)
    T, L = inst.T, inst.L
    _require_t(inst, "F6D", t, 1, T - 1)
    j2 = min(1, t - 1, L - 1) if F6D_J2 == "t-1" else min(1, t - 2, L - 1)
    b = _Builder(inst)
    b.y(t, inst.Vbar)
    b.y(t + 1, -inst.Cmin)
    b.term(inst.V, t + 1, j2)
    sp = inst.space
    return b.row({sp.x(t): 1, sp.x(t + 1): -1}, 0, CutParams("F6D", t).tag)


def f7_m_range(inst: UCInstance, t: int) -> range:
    dc = derive_constants(inst)
    hi = min(pos(t - inst.L - 1), floor_div(inst.Cmax - inst.Vbar, inst.V), pos(dc.gamma - inst.L))
    return range(0, hi + 1)


def gen_F7(inst: UCInstance, t: int, m: int = 0, S=(), *, strict: bool = True) -> LinearInequality:
    """``strict=False`` skips the m-range check (only 0 <= m < t is required)."""
    T, L, V = inst.T, inst.L, inst.V
    _require_t(inst, "F7", t, 1, T)
    if not strict and not 0 <= m < t:
        raise CutParamError(f"F7: m={m} must lie in [0, t-1]")
    if strict and m not in f7_m_range(inst, t):
        r = f7_m_range(inst, t)
        raise CutParamError(f"F7: m={m} outside [0, {r.stop - 1}]")
    S = tuple(sorted(set(S)))
    _require_subset("F7", S, t - m + 1, t - 1)
    kappa = derive_constants(inst).kappa
    jmax = lambda i: min(L - 1, i - 2, kappa)  # noqa: E731
    members = set(S) | {t}
    d = backward_chain(members, t - m) if m > 0 else {t: t}
    b = _Builder(inst)
    b.y(t, inst.Vbar)
    b.term((L - 1) * V, t, jmax(t))
    for i in sorted(members):
        b.term(V * (i - d[i]), i, jmax(i))
    b.term(inst.Cmax - inst.Vbar - (m + L - 1) * V, t - m, jmax(t - m))
    b.startup_weights(V, t, jmax(t))
    return b.row({inst.space.x(t): 1}, 0, CutParams("F7", t, m, S).tag)


def f8_m_range(inst: UCInstance, t: int) -> range:
    cap = floor_div(inst.Cmax - inst.Vbar, inst.V)
    lo = min(pos(inst.T - t - 1), inst.L - 1, cap)
    hi = min(pos(inst.T - t - 1), cap)
    return range(lo, hi + 1)


def gen_F8(inst: UCInstance, t: int, m: int = 0, S=()) -> LinearInequality:
    T, L, V = inst.T, inst.L, inst.V
    _require_t(inst, "F8", t, 1, T)
    rng = f8_m_range(inst, t)
    if m not in rng:
        raise CutParamError(f"F8: m={m} outside [{rng.start}, {rng.stop - 1}]")
    S = tuple(sorted(set(S)))
    _require_subset("F8", S, t + L + 1, t + m)
    delta = min(m, L - 1)
    b = _Builder(inst, extended=True)
    b.y(t, inst.Vbar)
    for i in range(1, delta + 1):
        b.y(t + i, V)
        for j in range(1, i + 1):
            b.u(t + j, -V)
    members = set(S) | {t + L}
    d = forward_chain(members, t + m + 1) if m >= L else {t + L: t + L}
    for i in sorted(members):
        b.term(V * (d[i] - i), i, delta)
    b.term(inst.Cmax - inst.Vbar - m * V, t + m + 1, delta)
    return b.row({inst.space.x(t): 1}, 0, CutParams("F8", t, m, S).tag)


def gen_F9(inst: UCInstance, t: int, m: int, S0=()) -> LinearInequality:
    T, L, V = inst.T, inst.L, inst.V
    _require_t(inst, "F9", t, 2, T)
    kappa = derive_constants(inst).kappa
    if not 1 <= m <= min(t - 1, kappa):
        raise CutParamError(f"F9: m={m} outside [1, {min(t - 1, kappa)}]")
    S0 = tuple(sorted(set(S0)))
    anchor = t - m + L
    _require_subset("F9", S0, anchor, t - 1, "S0")
    S = set(S0) | {t}
    q = min(S)
    delta = min(L - 1, m - 1)
    d = backward_chain(S, anchor) if m > L else {t: t}
    b = _Builder(inst)
    b.y(t, inst.Vbar)
    b.y(t - m, -inst.Cmin)
    for i in sorted(S - {anchor}):
        b.term(V * (i - d[i]), i, delta)
    b.term(delta * V, t, delta)
    b.term(inst.Cmin + V - inst.Vbar, q, delta)
    b.startup_weights(V, t, delta)
    sp = inst.space
    row = b.row({sp.x(t): 1, sp.x(t - m): -1}, 0, CutParams("F9", t, m, S0).tag)
    assert all(v < sp.dim for v in row.coeffs)
    return row


def gen_F10(inst: UCInstance, t: int, m: int) -> LinearInequality:
    T, L, V = inst.T, inst.L, inst.V
    _require_t(inst, "F10", t, 1, T - 1)
    kappa = derive_constants(inst).kappa
    if not 1 <= m <= min(T - t, kappa):
        raise CutParamError(f"F10: m={m} outside [1, {min(T - t, kappa)}]")
    q = t + L if F10_Q == "literal" else min(t + L, t + m)
    S = set(range(t + L + 1, t + m + 1)) | {q}
    delta = min(L - 1, m - 1)
    chain = S - {t + m}
    d = forward_chain(chain, t + m) if m > L else {i: i for i in chain}
    b = _Builder(inst)
    b.y(t, inst.Vbar)
    b.y(t + m, -inst.Cmin)
    for i in range(1, delta + 1):
        b.y(t + i, V)
        for j in range(1, i + 1):
            b.u(t + j, -V)
    for i in sorted(chain):
        b.term(V * (d[i] - i), i, delta)
    b.term(inst.Cmin + V - inst.Vbar, q, delta)
    sp = inst.space
    return b.row({sp.x(t): 1, sp.x(t + m): -1}, 0, CutParams("F10", t, m).tag)


def generate(inst: UCInstance, params: CutParams) -> LinearInequality:
    """Regenerate the member selected by ``params``."""
    f = params.family
    if f == "F2":
        return gen_F2(inst, params.t)
    if f == "F5":
        return gen_F5(inst, params.t, params.S)
    if f == "F6U":
        return gen_F6U(inst, params.t)
    if f == "F6D":
        return gen_F6D(inst, params.t)
    if f == "F7":
        return gen_F7(inst, params.t, params.m, params.S)
    if f == "F8":
        return gen_F8(inst, params.t, params.m, params.S)
    if f == "F9":
        return gen_F9(inst, params.t, params.m, params.S)
    return gen_F10(inst, params.t, params.m)


# ---------------------------------------------------------------------------
# enumeration


def _subsets(lo: int, hi: int):
    items = list(range(lo, hi + 1))
    for k in range(len(items) + 1):
        yield from itertools.combinations(items, k)


def family_params(inst: UCInstance, family: str) -> list[CutParams]:
    """All admissible index tuples of ``family`` in deterministic order."""
    T, L = inst.T, inst.L
    out = []
    if family == "F2":
        out = [CutParams("F2", t) for t in range(1, T + 1)]
    elif family == "F5":
        for t in range(1, T + 1):
            out += [CutParams("F5", t, 0, ()), CutParams("F5", t, 0, (min(t + 2, T),))]
    elif family in ("F6U", "F6D"):
        out = [CutParams(family, t) for t in range(1, T)]
    elif family == "F7":
        for t in range(1, T + 1):
            for m in f7_m_range(inst, t):
                out += [CutParams("F7", t, m, S) for S in _subsets(t - m + 1, t - 1)]
    elif family == "F8":
        for t in range(1, T + 1):
            for m in f8_m_range(inst, t):
                out += [CutParams("F8", t, m, S) for S in _subsets(t + L + 1, t + m)]
    elif family == "F9":
        kappa = derive_constants(inst).kappa
        for t in range(2, T + 1):
            for m in range(1, min(t - 1, kappa) + 1):
                out += [CutParams("F9", t, m, S) for S in _subsets(t - m + L, t - 1)]
    elif family == "F10":
        kappa = derive_constants(inst).kappa
        for t in range(1, T):
            out += [CutParams("F10", t, m) for m in range(1, min(T - t, kappa) + 1)]
    else:
        raise CutParamError(f"unknown family {family!r}")
    return out


FAMILY_REGIME = {"F2": Regime.K1, "F5": Regime.K2, "F6U": Regime.K2, "F6D": Regime.K2}


def family_admissible(inst: UCInstance, family: str) -> bool:
    need = FAMILY_REGIME.get(family)
    return need is None or inst.regime is need


@dataclass
class Member:
    params: CutParams
    ineq: LinearInequality
    aliases: tuple = ()

    def __iter__(self):  # unpacks as (params, ineq)
        yield self.params
        yield self.ineq


def enumerate_family(inst: UCInstance, family: str) -> list[Member]:
    """Every member of ``family``; identical rows are merged, keeping all tags."""
    if not family_admissible(inst, family):
        raise CutParamError(f"{family} is not defined for regime {inst.regime.value}")
    members: list[Member] = []
    index: dict = {}
    for p in family_params(inst, family):
        try:
            row = generate(inst, p)
        except OutOfHorizon as exc:
            log.info("skipping %s: references %s", p.tag, exc)
            continue
        key = row.normalized_key()
        if key in index:
            prev = members[index[key]]
            prev.aliases = prev.aliases + (p,)
            prev.ineq = prev.ineq.with_tag(prev.ineq.tag + "|" + p.tag)
            continue
        index[key] = len(members)
        members.append(Member(p, row))
    return members


def dedupe_rows(rows: Iterable[LinearInequality]) -> list[LinearInequality]:
    """Merge rows with identical normalized coefficients (first position wins)."""
    out: list[LinearInequality] = []
    index: dict = {}
    for r in rows:
        key = r.normalized_key()
        if key in index:
            k = index[key]
            out[k] = out[k].with_tag(out[k].tag + "|" + r.tag)
            continue
        index[key] = len(out)
        out.append(r)
    return out


HULL_FAMILIES = {
    "Q_K1": ("F2",),
    "Q_K2": ("F5", "F6U", "F6D"),
    "Q_UP": ("F7", "F9"),
    "Q_DOWN": ("F8", "F10"),
}
HULL_REGIME = {"Q_K1": Regime.K1, "Q_K2": Regime.K2}


def parse_hull(which: str) -> str:
    key = str(which).upper().replace("-", "_")
    if not key.startswith("Q_"):
        key = "Q_" + key
    if key not in HULLS:
        raise ValueError(f"unknown hull {which!r} (use q-k1, q-k2, q-up or q-down)")
    return key


def assemble_hull(inst: UCInstance, which: str, *, exclude: Iterable[str] = ()) -> InequalitySystem:
    """Logic rows, x >= Cmin y, u >= 0, the hull's cut families and explicit bounds.

    ``exclude`` drops whole families (negative controls).
    """
    which = parse_hull(which)
    need = HULL_REGIME.get(which)
    if need is not None and inst.regime is not need:
        raise CutParamError(f"{which} needs regime {need.value}, instance is {inst.regime.value}")
    rows = minupdown_rows(inst) + lower_bound_rows(inst) + u_nonneg_rows(inst)
    cut_rows = []
    for fam in HULL_FAMILIES[which]:
        if fam in exclude:
            continue
        cut_rows += [mem.ineq for mem in enumerate_family(inst, fam)]
    rows = dedupe_rows(rows + cut_rows)
    rows += bound_rows(inst, u_lower=False)
    name = which if not exclude else f"{which}-minus-{'-'.join(sorted(exclude))}"
    return InequalitySystem(inst.space, rows, name, binary_ids(inst))


def chain_span_ok(params: CutParams) -> bool:
    """Telescoping check: the chain coefficients sum to the chain's span."""
    t, m, S = params.t, params.m, params.S
    if params.family == "F7":
        if m == 0:
            return True
        d = backward_chain(set(S) | {t}, t - m)
        return sum(i - d[i] for i in d) == t - (t - m)
    return True
