"""Exact cutting-plane loop over the LP relaxation of P, P^U or P^D."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from .cuts import generate
from .formulation import Variant, build_base, relax_integrality
from .model import Point, UCInstance, format_rational
from .oracle import hull_vertices, oracle_optimize
from .polycore import lp_solve
from .separation import default_families, separate_all

PER_ITER_CAP = 25
ITER_CAP = 100
STALL_ROUNDS = 3


class CutLoopError(RuntimeError):
    pass


@dataclass
class CutLoopReport:
    iterations: list = field(default_factory=list)   # [{"objective", "cuts": [CutParams]}]
    status: str = ""
    gap: Fraction | None = None
    oracle_objective: Fraction | None = None
    solution: Point | None = None

    @property
    def final_objective(self):
        return self.iterations[-1]["objective"] if self.iterations else None

    def cut_counts(self) -> dict:
        c = Counter(p.family for it in self.iterations for p in it["cuts"])
        return dict(sorted(c.items()))

    def to_doc(self) -> dict:
        return {
            "status": self.status,
            "gap": format_rational(self.gap),
            "oracle_objective": format_rational(self.oracle_objective),
            "iterations": [{"objective": format_rational(it["objective"]),
                            "cuts": [p.tag for p in it["cuts"]]}
                           for it in self.iterations],
            "cut_counts": self.cut_counts(),
            "solution": self.solution.to_doc() if self.solution else None,
        }


def _binary(inst: UCInstance, vals) -> bool:
    return all(v in (0, 1) for v in vals[inst.T:])


def run_cut_loop(inst: UCInstance, variant, objective, families=None, *,
                 per_iter_cap: int = PER_ITER_CAP, iter_cap: int = ITER_CAP,
                 cap: int | None = None, guard: bool = True) -> CutLoopReport:
    """Maximize ``objective`` over the relaxation, adding violated cuts until
    the solution is integral, no cut is violated, the bound stalls or the
    iteration cap is hit. ``families=None`` uses the variant's defaults."""
    if iter_cap < 1:
        raise ValueError("iter_cap must be at least 1")
    variant = Variant.parse(variant)
    fams = default_families(inst, variant) if families is None else tuple(families)
    obj = {int(k): Fraction(v) for k, v in dict(objective).items()}
    system = relax_integrality(build_base(inst, variant))
    ext = hull_vertices(inst, variant, cap) if guard else None
    rep = CutLoopReport()
    for it in range(iter_cap):
        lp = lp_solve(system, obj, "max")
        if lp.status != "optimal":
            raise CutLoopError(f"LP is {lp.status} at iteration {it}")
        if rep.iterations and lp.objective > rep.iterations[-1]["objective"]:
            raise CutLoopError("LP bound increased after adding cuts")
        rep.iterations.append({"objective": lp.objective, "cuts": []})
        rep.solution = Point(lp.solution)
        if _binary(inst, lp.solution):
            rep.status = "integral-optimal"
            break
        objs = [r["objective"] for r in rep.iterations]
        if len(objs) > STALL_ROUNDS and len(set(objs[-STALL_ROUNDS - 1:])) == 1:
            rep.status = "stalled"
            break
        found = separate_all(inst, variant, lp.solution, fams) if fams else []
        if not found:
            rep.status = "no-violation"
            break
        if it == iter_cap - 1:
            rep.status = "iteration-cap"
            break
        rows = []
        for res in found[:per_iter_cap]:
            row = generate(inst, res.params)
            if guard:
                bad = next((p for p in ext if row.violation(p) > 0), None)
                if bad is not None:
                    raise CutLoopError(f"cut {row.tag} removes feasible point {bad}")
            rows.append(row)
            rep.iterations[-1]["cuts"].append(res.params)
        system = system.extended(rows)
    rep.oracle_objective = oracle_optimize(inst, variant, obj, cap).objective
    rep.gap = rep.final_objective - rep.oracle_objective
    return rep


def gap_profile(inst: UCInstance, variant, objectives, families=None, **kw) -> list[dict]:
    """Per objective: relaxation gap, gap after cuts, cut counts by family."""
    out = []
    for k, obj in enumerate(objectives):
        rep = run_cut_loop(inst, variant, obj, families, **kw)
        base = rep.iterations[0]["objective"] - rep.oracle_objective
        out.append({"objective": k, "base_gap": base, "final_gap": rep.gap,
                    "status": rep.status, "iterations": len(rep.iterations),
                    "cuts": rep.cut_counts()})
    return out
