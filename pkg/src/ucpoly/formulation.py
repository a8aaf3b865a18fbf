"""Base constraint systems for the single-generator polytopes."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable

from .model import LinExpr, LinearInequality, UCInstance, VariableSpace


class Variant(str, enum.Enum):
    P_FULL = "full"
    P_UP = "up"
    P_DOWN = "down"

    @classmethod
    def parse(cls, text) -> "Variant":
        if isinstance(text, cls):
            return text
        key = str(text).lower().replace("p_", "")
        for v in cls:
            if v.value == key:
                return v
        raise ValueError(f"unknown variant {text!r} (use full, up or down)")


@dataclass
class InequalitySystem:
    space: VariableSpace | None
    rows: list
    name: str = ""
    integer_vars: frozenset = frozenset()
    n: int | None = None

    def __post_init__(self):
        if self.n is None:
            self.n = self.space.dim if self.space is not None else 0
        tags = [r.tag for r in self.rows]
        if len(set(tags)) != len(tags):
            dup = sorted({t for t in tags if tags.count(t) > 1})
            raise ValueError(f"duplicate row tags in {self.name}: {dup[:5]}")

    @property
    def dim(self) -> int:
        return self.n

    def __len__(self):
        return len(self.rows)

    def le_rows(self):
        out = []
        for r in self.rows:
            out.extend(r.le_rows())
        return out

    def extended(self, rows: Iterable[LinearInequality], name: str | None = None) -> "InequalitySystem":
        return replace(self, rows=list(self.rows) + list(rows), name=name or self.name)

    def without(self, predicate, name: str | None = None) -> "InequalitySystem":
        return replace(self, rows=[r for r in self.rows if not predicate(r)], name=name or self.name)

    def restricted(self, var_ids) -> "InequalitySystem":
        """The same rows over the sub-space ``var_ids`` (rows must not use other ids)."""
        ids = list(var_ids)
        pos = {v: i for i, v in enumerate(ids)}
        rows = []
        for r in self.rows:
            if any(v not in pos for v in r.coeffs):
                raise ValueError(f"row {r.tag} uses a variable outside the restriction")
            rows.append(LinearInequality({pos[v]: c for v, c in r.coeffs.items()}, r.rhs, r.sense, r.tag))
        return InequalitySystem(None, rows, self.name, frozenset(pos[v] for v in self.integer_vars if v in pos),
                                n=len(ids))

    def is_feasible(self, p) -> bool:
        return all(r.violation(p) <= 0 for r in self.rows)

    def violated(self, p) -> list:
        return [r for r in self.rows if r.violation(p) > 0]

    def dump(self) -> str:
        return "".join(r.format(self.space) + "\n" for r in self.rows)


def _le(space, expr: LinExpr, rhs, tag) -> LinearInequality:
    return LinearInequality(expr, Fraction(rhs), "<=", tag, space.dim)


def minupdown_rows(inst: UCInstance) -> list[LinearInequality]:
    """Minimum-up, minimum-down and start-up logic rows."""
    sp = inst.space
    T, L, ell = inst.T, inst.L, inst.ell
    rows = []
    for t in range(L + 1, T + 1):
        e = LinExpr()
        for i in range(t - L + 1, t + 1):
            e.add(sp.u(i), 1)
        e.add(sp.y(t), -1)
        rows.append(_le(sp, e, 0, f"minup[t={t}]"))
    for t in range(ell + 1, T + 1):
        e = LinExpr()
        for i in range(t - ell + 1, t + 1):
            e.add(sp.u(i), 1)
        e.add(sp.y(t - ell), 1)
        rows.append(_le(sp, e, 1, f"mindown[t={t}]"))
    for t in range(2, T + 1):
        e = LinExpr().add(sp.y(t), 1).add(sp.y(t - 1), -1).add(sp.u(t), -1)
        rows.append(_le(sp, e, 0, f"startup[t={t}]"))
    return rows


def lower_bound_rows(inst: UCInstance) -> list[LinearInequality]:
    sp = inst.space
    return [_le(sp, LinExpr().add(sp.x(t), -1).add(sp.y(t), inst.Cmin), 0, f"lower[t={t}]")
            for t in range(1, inst.T + 1)]


def upper_bound_rows(inst: UCInstance) -> list[LinearInequality]:
    sp = inst.space
    return [_le(sp, LinExpr().add(sp.x(t), 1).add(sp.y(t), -inst.Cmax), 0, f"upper[t={t}]")
            for t in range(1, inst.T + 1)]


def ramp_up_rows(inst: UCInstance) -> list[LinearInequality]:
    # x_t - x_{t-1} <= V y_{t-1} + Vbar (1 - y_{t-1})
    sp = inst.space
    return [_le(sp, LinExpr().add(sp.x(t), 1).add(sp.x(t - 1), -1).add(sp.y(t - 1), inst.Vbar - inst.V),
                inst.Vbar, f"rampup[t={t}]")
            for t in range(2, inst.T + 1)]


def ramp_down_rows(inst: UCInstance) -> list[LinearInequality]:
    # x_{t-1} - x_t <= V y_t + Vbar (1 - y_t)
    sp = inst.space
    return [_le(sp, LinExpr().add(sp.x(t - 1), 1).add(sp.x(t), -1).add(sp.y(t), inst.Vbar - inst.V),
                inst.Vbar, f"rampdown[t={t}]")
            for t in range(2, inst.T + 1)]


def u_nonneg_rows(inst: UCInstance, tag: str = "nonneg:u") -> list[LinearInequality]:
    sp = inst.space
    return [_le(sp, LinExpr().add(sp.u(t), -1), 0, f"{tag}[t={t}]") for t in range(2, inst.T + 1)]


def bound_rows(inst: UCInstance, *, x_lower=True, u_lower=True) -> list[LinearInequality]:
    """Explicit variable bounds: x >= 0, 0 <= y <= 1, 0 <= u <= 1."""
    sp = inst.space
    T = inst.T
    rows = []
    if x_lower:
        rows += [_le(sp, LinExpr().add(sp.x(t), -1), 0, f"bnd:x>=0[t={t}]") for t in range(1, T + 1)]
    rows += [_le(sp, LinExpr().add(sp.y(t), -1), 0, f"bnd:y>=0[t={t}]") for t in range(1, T + 1)]
    rows += [_le(sp, LinExpr().add(sp.y(t), 1), 1, f"bnd:y<=1[t={t}]") for t in range(1, T + 1)]
    if u_lower:
        rows += [_le(sp, LinExpr().add(sp.u(t), -1), 0, f"bnd:u>=0[t={t}]") for t in range(2, T + 1)]
    rows += [_le(sp, LinExpr().add(sp.u(t), 1), 1, f"bnd:u<=1[t={t}]") for t in range(2, T + 1)]
    return rows


def binary_ids(inst: UCInstance) -> frozenset:
    return frozenset(range(inst.T, inst.space.dim))


def build_base(inst: UCInstance, variant=Variant.P_FULL) -> InequalitySystem:
    """The model rows for the chosen variant plus explicit bounds."""
    variant = Variant.parse(variant)
    rows = minupdown_rows(inst) + lower_bound_rows(inst) + upper_bound_rows(inst)
    if variant is not Variant.P_DOWN:
        rows += ramp_up_rows(inst)
    if variant is not Variant.P_UP:
        rows += ramp_down_rows(inst)
    rows += bound_rows(inst)
    return InequalitySystem(inst.space, rows, f"base:{variant.value}", binary_ids(inst))


def build_mud_hull_base(inst: UCInstance) -> InequalitySystem:
    """Logic rows, u >= 0 and the y/u upper bounds: the minimum-up/-down hull."""
    sp = inst.space
    T = inst.T
    rows = minupdown_rows(inst) + u_nonneg_rows(inst)
    rows += [_le(sp, LinExpr().add(sp.y(t), -1), 0, f"bnd:y>=0[t={t}]") for t in range(1, T + 1)]
    rows += [_le(sp, LinExpr().add(sp.y(t), 1), 1, f"bnd:y<=1[t={t}]") for t in range(1, T + 1)]
    rows += [_le(sp, LinExpr().add(sp.u(t), 1), 1, f"bnd:u<=1[t={t}]") for t in range(2, T + 1)]
    return InequalitySystem(sp, rows, "mud-hull-base", binary_ids(inst))


def relax_integrality(system: InequalitySystem) -> InequalitySystem:
    return replace(system, integer_vars=frozenset(), rows=list(system.rows))


def binary_subspace(inst: UCInstance) -> list[int]:
    """Variable ids of (y, u), for restricting systems that never mention x."""
    return list(range(inst.T, inst.space.dim))


def redundancy_report(system: InequalitySystem) -> dict:
    """Map tag -> True when the row is implied by all the other rows (exact LP)."""
    from .polycore import lp_solve

    out = {}
    le = [(r, r.le_rows()) for r in system.rows]
    for idx, (row, parts) in enumerate(le):
        others = [p for j, (_, ps) in enumerate(le) if j != idx for p in ps]
        implied = True
        for coeffs, rhs in parts:
            res = lp_solve((system.dim, others), coeffs, "max")
            if res.status == "unbounded" or (res.status == "optimal" and res.objective > rhs):
                implied = False
                break
        out[row.tag] = implied
    return out
