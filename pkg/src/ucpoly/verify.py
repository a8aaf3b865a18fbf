"""Per-instance checks of validity, facets, full dimension and hull equality.

Every check compares a linear description against the oracle's extreme
points. Refutations carry the offending points so they can be re-evaluated
independently.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .cuts import CutParamError, HULL_FAMILIES, assemble_hull, parse_hull
from .formulation import InequalitySystem, Variant, build_base, relax_integrality
from .model import LinearInequality, Point, Regime, UCInstance, format_rational
from .oracle import DEFAULT_CAP, OracleCapError, hull_vertices, oracle_optimize
from .polycore import Unbounded, affine_rank, dd_enumerate, lp_solve

HULL_VARIANT = {"Q_K1": Variant.P_FULL, "Q_K2": Variant.P_FULL, "Q_UP": Variant.P_UP,
                "Q_DOWN": Variant.P_DOWN, "BASE": Variant.P_FULL}
DD_T_LIMIT = {"Q_K1": 6, "Q_K2": 6, "Q_UP": 5, "Q_DOWN": 5, "BASE": 5}
OBJ_RANGE = 10
DEFAULT_SEED = 20240601


@dataclass
class VerificationReport:
    claim: str
    instance: UCInstance
    status: str                          # confirmed | refuted | skipped
    witnesses: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)
    reason: str = ""

    @property
    def confirmed(self) -> bool:
        return self.status == "confirmed"

    @property
    def refuted(self) -> bool:
        return self.status == "refuted"

    def to_doc(self) -> dict:
        doc = {"claim": self.claim, "instance": self.instance.to_doc(), "status": self.status,
               "counts": _jsonable(self.counts), "witnesses": _jsonable(self.witnesses)}
        if self.reason:
            doc["reason"] = self.reason
        return doc

    def line(self) -> str:
        extra = f" ({self.reason})" if self.reason else ""
        cnt = " ".join(f"{k}={format_rational(v) if isinstance(v, Fraction) else v}"
                       for k, v in self.counts.items() if not isinstance(v, (list, dict)))
        return f"{self.status:9s} {self.claim} [{self.instance.summary()}] {cnt}{extra}"


def _jsonable(obj):
    if isinstance(obj, Point):
        return obj.to_doc()
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "to_doc"):
        return obj.to_doc()
    return obj


def hull_key(which: str) -> str:
    key = str(which).upper().replace("-", "_")
    if key in ("BASE", "Q_BASE"):
        return "BASE"
    return parse_hull(which)


def hull_system(inst: UCInstance, which: str, *, exclude=()) -> InequalitySystem:
    """The linear description under test; ``BASE`` is the LP relaxation of P."""
    key = hull_key(which)
    if key == "BASE":
        return relax_integrality(build_base(inst, Variant.P_FULL))
    return assemble_hull(inst, key, exclude=exclude)


def _violation_witness(p: Point, row: LinearInequality) -> dict:
    return {"kind": "violated-row", "point": p, "row": row.tag, "lhs": row.lhs_value(p),
            "rhs": row.rhs, "violation": row.violation(p)}


def _claim_name(kind: str, ineq: LinearInequality | None = None, variant=None) -> str:
    parts = [kind]
    if variant is not None:
        parts.append(Variant.parse(variant).value)
    if ineq is not None and ineq.tag:
        parts.append(ineq.tag)
    return ":".join(parts)


# ---------------------------------------------------------------------------
# single inequalities


def check_validity(ineq: LinearInequality, inst: UCInstance, variant=Variant.P_FULL, *,
                   cap: int | None = None, points=None) -> VerificationReport:
    """``ineq`` holds at every extreme point of conv(variant)."""
    pts = hull_vertices(inst, variant, cap) if points is None else points
    claim = _claim_name("valid", ineq, variant)
    bad = [_violation_witness(p, ineq) for p in pts if ineq.violation(p) > 0]
    bad.sort(key=lambda w: -w["violation"])
    status = "refuted" if bad else "confirmed"
    return VerificationReport(claim, inst, status, bad[:5],
                              {"points": len(pts), "violations": len(bad)})


def check_full_dimension(inst: UCInstance, variant=Variant.P_FULL, *, cap: int | None = None
                         ) -> VerificationReport:
    pts = hull_vertices(inst, variant, cap)
    r = affine_rank([p.values for p in pts])
    need = inst.space.dim
    status = "confirmed" if r == need else "refuted"
    wit = [] if r == need else [{"kind": "rank-deficient", "rank": r, "needed": need,
                                 "points": list(pts)}]
    return VerificationReport(_claim_name("full-dimension", None, variant), inst, status, wit,
                              {"points": len(pts), "rank": r, "needed": need})


def check_facet(ineq: LinearInequality, inst: UCInstance, variant=Variant.P_FULL, *,
                cap: int | None = None) -> VerificationReport:
    """Valid, and the tight extreme points span a face of dimension 3T-2."""
    pts = hull_vertices(inst, variant, cap)
    claim = _claim_name("facet", ineq, variant)
    valid = check_validity(ineq, inst, variant, points=pts)
    if valid.refuted:
        valid.claim = claim
        return valid
    need = inst.space.dim - 1
    full = affine_rank([p.values for p in pts])
    if full != need + 1:
        return VerificationReport(claim, inst, "skipped", [], {"points": len(pts), "rank": full},
                                  reason=f"conv is not full-dimensional (rank {full})")
    tight = [p for p in pts if ineq.lhs_value(p) == ineq.rhs]
    r = affine_rank([p.values for p in tight]) if tight else -1
    counts = {"points": len(pts), "tight": len(tight), "rank": r, "needed": need}
    if r == need:
        return VerificationReport(claim, inst, "confirmed", [], counts)
    wit = [{"kind": "rank-deficient", "rank": r, "needed": need, "tight": tight}]
    return VerificationReport(claim, inst, "refuted", wit, counts)


# ---------------------------------------------------------------------------
# hull equality


def _fractional_ids(inst: UCInstance, p: Point) -> list[str]:
    T = inst.T
    return [inst.space.name(T + k) for k, v in enumerate(p.binary_part()) if v not in (0, 1)]


def check_hull_equality(inst: UCInstance, which: str, *, exclude=(), cap: int | None = None,
                        max_T: int | None = None, system: InequalitySystem | None = None
                        ) -> VerificationReport:
    """Both inclusions between conv(variant) and the described polytope.

    (a) every oracle extreme point satisfies every row; (b) every vertex of
    the described polytope has binary (y, u) and is feasible for the variant.
    ``which="base"`` tests the LP relaxation of P itself, which is claimed to
    be integral when V < Cmax - Cmin.
    """
    key = hull_key(which)
    claim = f"hull:{key}" + (f"-minus-{'-'.join(sorted(exclude))}" if exclude else "")
    variant = HULL_VARIANT[key]
    if key == "BASE" and inst.regime is Regime.K1:
        raise CutParamError("the base-relaxation claim needs V < Cmax - Cmin (instance is K1)")
    limit = DD_T_LIMIT[key] if max_T is None else max_T
    if inst.T > limit:
        return VerificationReport(claim, inst, "skipped",
                                  reason=f"T={inst.T} above the vertex-enumeration limit {limit}")
    sysm = system if system is not None else hull_system(inst, key, exclude=exclude)
    try:
        pts = hull_vertices(inst, variant, cap if cap is not None else max(DEFAULT_CAP, inst.T))
    except OracleCapError as exc:
        return VerificationReport(claim, inst, "skipped", reason=str(exc))

    wit_a = []
    for p in pts:
        for r in sysm.rows:
            if r.violation(p) > 0:
                wit_a.append(_violation_witness(p, r))
    try:
        verts = dd_enumerate(sysm).points
    except Unbounded as exc:
        wit = [{"kind": "ray", "direction": [Fraction(v) for v in ray]} for ray in exc.rays[:3]]
        return VerificationReport(claim, inst, "refuted", wit_a[:5] + wit,
                                  {"extreme_points": len(pts), "rows": len(sysm.rows)},
                                  reason="described polyhedron is unbounded")
    base = build_base(inst, variant)
    wit_b = []
    fractional = infeasible = 0
    for v in verts:
        p = Point(v)
        frac = _fractional_ids(inst, p)
        if frac:
            fractional += 1
            wit_b.append({"kind": "fractional-vertex", "point": p, "fractional": frac})
            continue
        bad = base.violated(p)
        if bad:
            infeasible += 1
            wit_b.append({"kind": "infeasible-vertex", "point": p,
                          "violated_rows": [r.tag for r in bad]})
    counts = {"extreme_points": len(pts), "rows": len(sysm.rows), "vertices": len(verts),
              "violations_a": len(wit_a), "fractional_vertices": fractional,
              "infeasible_vertices": infeasible}
    status = "refuted" if wit_a or wit_b else "confirmed"
    return VerificationReport(claim, inst, status, wit_a[:5] + wit_b[:5], counts)


def random_objective(rng: random.Random, dim: int) -> dict:
    return {k: Fraction(rng.randint(-OBJ_RANGE, OBJ_RANGE)) for k in range(dim)}


def random_objective_equivalence(inst: UCInstance, which: str, trials: int = 200, *,
                                 seed: int = DEFAULT_SEED, exclude=(), cap: int | None = None,
                                 objectives=None) -> VerificationReport:
    """LP optimum over the description equals the oracle optimum for random objectives.

    A necessary condition for hull equality that avoids vertex enumeration.
    """
    key = hull_key(which)
    claim = f"objectives:{key}" + (f"-minus-{'-'.join(sorted(exclude))}" if exclude else "")
    variant = HULL_VARIANT[key]
    sysm = hull_system(inst, key, exclude=exclude)
    cap = cap if cap is not None else max(DEFAULT_CAP, inst.T)
    rng = random.Random(seed)
    objs = list(objectives) if objectives is not None else \
        [random_objective(rng, inst.space.dim) for _ in range(trials)]
    gaps = []
    for obj in objs:
        lp = lp_solve(sysm, obj, "max")
        orc = oracle_optimize(inst, variant, obj, cap)
        if lp.status != "optimal" or lp.objective != orc.objective:
            gaps.append({"kind": "objective-gap", "objective": [obj.get(k, 0) for k in range(inst.space.dim)],
                         "lp_status": lp.status, "lp_value": lp.objective,
                         "oracle_value": orc.objective,
                         "lp_point": Point(lp.solution) if lp.solution else None})
    counts = {"trials": len(objs), "seed": seed, "gaps": len(gaps)}
    status = "refuted" if gaps else "confirmed"
    return VerificationReport(claim, inst, status, gaps[:5], counts)


# ---------------------------------------------------------------------------
# batches


def family_facet_reports(inst: UCInstance, family: str, variant, *, cap: int | None = None) -> list:
    from .cuts import enumerate_family
    return [check_facet(mem.ineq, inst, variant, cap=cap) for mem in enumerate_family(inst, family)]


def hull_facet_reports(inst: UCInstance, which: str, *, cap: int | None = None) -> list:
    key = parse_hull(which)
    out = []
    for fam in HULL_FAMILIES[key]:
        out += family_facet_reports(inst, fam, HULL_VARIANT[key], cap=cap)
    return out


def _run_task(task):
    fn, args, kwargs = task
    return fn(*args, **kwargs)


def run_parallel(tasks, jobs: int = 1) -> list:
    """Run ``(fn, args, kwargs)`` tasks; results keep the task order for any ``jobs``."""
    tasks = list(tasks)
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_task, tasks))


# ---------------------------------------------------------------------------
# extreme-point characterizations


def check_grid(inst: UCInstance, variant=Variant.P_UP, *, cap: int | None = None) -> VerificationReport:
    """Every extreme x-coordinate lies in the finite grid of output levels."""
    from .oracle import grid_check
    pts = hull_vertices(inst, variant, cap)
    res = grid_check(pts, inst)
    wit = [{"kind": "off-grid", "point": pts[v["point"]], "t": v["t"], "value": v["value"]}
           for v in res["violators"][:5]]
    return VerificationReport(_claim_name("grid", None, variant), inst,
                              "confirmed" if res["ok"] else "refuted", wit,
                              {"points": len(pts), "off_grid": len(res["violators"]),
                               "grid_size": len(res["grid"])})


def _inclusion_report(claim, inst, pts, generated, variant) -> VerificationReport:
    gen = set(generated)
    missing = [p for p in pts if p not in gen]
    base = build_base(inst, variant)
    infeasible = [p for p in generated if not base.is_feasible(p)]
    wit = [{"kind": "uncharacterized-extreme-point", "point": p} for p in missing[:5]]
    wit += [{"kind": "infeasible-generated-point", "point": p,
             "violated_rows": [r.tag for r in base.violated(p)]} for p in infeasible[:5]]
    counts = {"extreme_points": len(pts), "generated": len(gen), "missing": len(missing),
              "infeasible_generated": len(infeasible)}
    return VerificationReport(claim, inst, "refuted" if wit else "confirmed", wit, counts)


def check_k1_characterization(inst: UCInstance, *, cap: int | None = None) -> VerificationReport:
    """Extreme points of conv(P) are among the characterized points, all of which are feasible."""
    from .oracle import k1_characterized_points
    pts = hull_vertices(inst, Variant.P_FULL, cap)
    return _inclusion_report("k1-characterization", inst, pts, k1_characterized_points(inst),
                             Variant.P_FULL)


def check_scenario_trees(inst: UCInstance, *, cap: int | None = None) -> VerificationReport:
    """Extreme points of conv(P^U) come from the scenario trees (Cmax = Cmin + 2V).

    Only inclusion of the extreme points is claimed; tree points need not all
    be feasible, so the feasibility part is reported in the counts only.
    """
    from .oracle import scenario_tree_points_k2up
    pts = hull_vertices(inst, Variant.P_UP, cap)
    gen = scenario_tree_points_k2up(inst)
    gs = set(gen)
    missing = [p for p in pts if p not in gs]
    wit = [{"kind": "uncharacterized-extreme-point", "point": p} for p in missing[:5]]
    base = build_base(inst, Variant.P_UP)
    counts = {"extreme_points": len(pts), "generated": len(gs), "missing": len(missing),
              "infeasible_generated": sum(not base.is_feasible(p) for p in gen)}
    return VerificationReport("scenario-trees:up", inst, "refuted" if wit else "confirmed", wit, counts)
