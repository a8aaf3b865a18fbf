"""Acceptance criteria, one PASS/FAIL line each (also shown in the pytest summary).

Instances come from seeded samplers over the stated classes. A criterion
that fails here fails because a claim is refuted on a sampled instance; the
witnesses are printed with the line.
"""

import functools
import random
from fractions import Fraction as F

import pytest

from samplers import (chain_instances, general_instances, k1_instances, k2_instances,
                      random_fractional_point, record)
from ucpoly import cuts, verify
from ucpoly.cutloop import run_cut_loop
from ucpoly.formulation import Variant, build_base, relax_integrality
from ucpoly.model import LinearInequality, Point
from ucpoly.polycore import rank_of
from ucpoly.separation import brute_force_separate, separate_chain_family

K1 = k1_instances()
K2 = k2_instances()
GEN = general_instances()
GEN6 = general_instances(n=3, Ts=(6,), seed=7)


@functools.lru_cache(maxsize=None)
def hull(inst, which, exclude=()):
    return verify.check_hull_equality(inst, which, exclude=exclude)


def _short(rep):
    w = rep.witnesses[0] if rep.witnesses else {}
    what = w.get("kind", rep.reason or "?")
    pt = w.get("point")
    return f"[{rep.instance.summary()}] {rep.claim} {what}" + (f" at {pt}" if pt is not None else "")


def _hull_criterion(label, pairs):
    reps = [hull(inst, which) for inst, which in pairs]
    bad = [r for r in reps if not r.confirmed]
    detail = f"{len(reps) - len(bad)}/{len(reps)} confirmed"
    if bad:
        detail += "; refuted: " + " | ".join(_short(r) for r in bad[:4])
        if len(bad) > 4:
            detail += f" | ... {len(bad) - 4} more"
    record(label, not bad, detail)
    return bad


def test_c01_k1_hull_equality():
    assert len(K1) >= 10
    bad = _hull_criterion("C1 k1 hull equality (Q_K1)", [(i, "q-k1") for i in K1])
    assert not bad, [_short(r) for r in bad]


def test_c02_k2_hull_equality():
    assert len(K2) >= 10
    bad = _hull_criterion("C2 k2 hull equality (Q_K2)", [(i, "q-k2") for i in K2])
    assert not bad, [_short(r) for r in bad]


def test_c03_ramp_hull_equality():
    assert len(GEN) >= 10
    pairs = [(i, w) for i in GEN for w in ("q-up", "q-down")]
    reps = [hull(i, w) for i, w in pairs]
    obj = [verify.random_objective_equivalence(i, w, 200) for i in GEN6 for w in ("q-up", "q-down")]
    bad = [r for r in reps + obj if not r.confirmed]
    detail = (f"DD {sum(r.confirmed for r in reps)}/{len(reps)} confirmed, "
              f"T=6 objectives {sum(r.confirmed for r in obj)}/{len(obj)} confirmed")
    if bad:
        detail += "; refuted: " + " | ".join(_short(r) for r in bad[:4])
        if len(bad) > 4:
            detail += f" | ... {len(bad) - 4} more"
    record("C3 ramp hulls (Q_UP, Q_DOWN)", not bad, detail)
    assert not bad, [_short(r) for r in bad]


def _facet_jobs():
    for inst in K1:
        yield inst, "F2", "full"
    for inst in K2:
        for fam in ("F5", "F6U", "F6D"):
            yield inst, fam, "full"
    for inst in GEN:
        for fam, var in (("F7", "up"), ("F9", "up"), ("F8", "down"), ("F10", "down")):
            yield inst, fam, var


def test_c04_facets():
    total, bad = 0, []
    for inst, fam, var in _facet_jobs():
        for rep in verify.family_facet_reports(inst, fam, var):
            total += 1
            if not rep.confirmed:
                bad.append(rep)
    detail = f"{total - len(bad)}/{total} members facet-defining"
    if bad:
        kinds = {}
        for r in bad:
            kinds.setdefault(r.claim.split(":")[-1].split("[")[0], []).append(r)
        detail += "; not confirmed: " + ", ".join(
            f"{fam} x{len(rs)} (e.g. {rs[0].claim.split(':')[-1]} [{rs[0].instance.summary()}] "
            f"{rs[0].status} rank {rs[0].counts.get('rank')}/{rs[0].counts.get('needed')})"
            for fam, rs in sorted(kinds.items()))
    record("C4 facet-defining members", not bad, detail)
    assert not bad, detail


def test_c05_grid():
    reps = [verify.check_grid(i, v) for i in GEN + GEN6 for v in ("up", "down")]
    bad = [r for r in reps if not r.confirmed]
    record("C5 extreme x-values on the grid", not bad,
           f"{len(reps) - len(bad)}/{len(reps)} confirmed"
           + ("" if not bad else "; " + " | ".join(_short(r) for r in bad[:4])))
    assert not bad


def test_c06_extreme_point_characterizations():
    reps = [verify.check_k1_characterization(i) for i in K1]
    two_v = [i for i in GEN + GEN6 + K2 if i.Cmax == i.Cmin + 2 * i.V]
    reps += [verify.check_scenario_trees(i) for i in two_v]
    bad = [r for r in reps if not r.confirmed]
    record("C6 extreme-point characterizations", not bad,
           f"{len(reps) - len(bad)}/{len(reps)} confirmed ({len(K1)} K1, {len(two_v)} scenario-tree)"
           + ("" if not bad else "; " + " | ".join(_short(r) for r in bad[:4])))
    assert len(two_v) >= 3
    assert not bad


def test_c07_separation_exactness():
    rng = random.Random(11)
    insts = chain_instances()
    mismatches, checked, mmax_seen = [], 0, 0
    for fam in ("F7", "F8", "F9"):
        for k in range(100):
            inst = insts[k % len(insts)]
            pt = random_fractional_point(rng, inst)
            dp = separate_chain_family(inst, fam, pt, mmax=4)
            bf = brute_force_separate(inst, fam, pt, mmax=4)
            checked += 1
            if dp.violation != bf.violation:
                mismatches.append((fam, inst.summary(), dp, bf))
            if bf.params:
                mmax_seen = max(mmax_seen, bf.params.m)
    record("C7 separation DP equals brute force", not mismatches,
           f"{checked} points, {len(mismatches)} mismatches, largest winning m {mmax_seen}")
    assert not mismatches


def test_c08_gap_closure():
    settings = []
    for inst in general_instances(n=2, Ts=(4,), seed=8):
        settings += [(inst, "up", ("F7", "F9")), (inst, "down", ("F8", "F10"))]
    settings += [(inst, "full", ("F2",)) for inst in k1_instances(n=2, Ts=(4,), seed=8)]
    rng = random.Random(5)
    bad, runs = [], 0
    for inst, var, fams in settings:
        for _ in range(50):
            obj = verify.random_objective(rng, inst.space.dim)
            rep = run_cut_loop(inst, var, obj, fams)
            runs += 1
            if rep.gap != 0:
                bad.append((inst.summary(), var, rep.status, rep.gap))
    detail = f"{runs - len(bad)}/{runs} runs closed the gap"
    if bad:
        by = {}
        for s, var, st, gap in bad:
            by.setdefault((s, var), []).append((st, gap))
        detail += "; open gaps: " + " | ".join(
            f"[{s}] {var}: {len(v)} runs (e.g. status {v[0][0]}, gap {v[0][1]})"
            for (s, var), v in by.items())
    record("C8 cut-loop gap closure", not bad, detail)
    assert not bad, detail


def _is_relaxation_vertex(inst, p: Point) -> bool:
    sysm = relax_integrality(build_base(inst, Variant.P_FULL))
    if not sysm.is_feasible(p):
        return False
    tight = [list(r.coeffs.get(v, 0) for v in range(inst.space.dim))
             for r in sysm.rows if r.lhs_value(p) == r.rhs]
    return rank_of(tight) == inst.space.dim


def test_c09_base_relaxation_integrality():
    insts = [i for i in GEN]
    reps = [hull(i, "base") for i in insts]
    refuted = [r for r in reps if r.refuted]
    preserved = True
    for r in refuted:
        w = next(w for w in r.witnesses if w["kind"] == "fractional-vertex")
        p = w["point"]
        preserved &= _is_relaxation_vertex(r.instance, p) and not p.is_binary()
    ok = all(r.confirmed for r in reps) or (preserved and len(refuted) > 0)
    detail = (f"{len(reps) - len(refuted)}/{len(reps)} integral; refuted on {len(refuted)} with "
              f"re-validated fractional-vertex witnesses (escalated as an open question), e.g. "
              + (_short(refuted[0]) if refuted else "none"))
    record("C9 base relaxation integrality (confirmed or escalated with witness)", ok, detail)
    assert ok


def _ray_ok(system, d) -> bool:
    return any(d) and all(sum(c * d[v] for v, c in r.coeffs.items()) <= 0
                          for r in system.rows if r.sense == "<=")


def _weakened_detected(inst, which, fam) -> bool:
    rep = hull(inst, which, (fam,))
    if rep.refuted:
        for w in rep.witnesses:
            if w["kind"] == "ray":
                return _ray_ok(verify.hull_system(inst, which, exclude=(fam,)), w["direction"])
            if w["kind"] in ("fractional-vertex", "infeasible-vertex"):
                return True
    obj = verify.random_objective_equivalence(inst, which, 50, exclude=(fam,))
    return obj.refuted


def test_c10_negative_controls():
    lines, ok = [], True
    pools = {"q-k1": [i for i in K1 if hull(i, "q-k1").confirmed],
             "q-k2": [i for i in K2 if hull(i, "q-k2").confirmed],
             "q-up": [i for i in GEN if hull(i, "q-up").confirmed],
             "q-down": [i for i in GEN if hull(i, "q-down").confirmed]}
    for which, pool in pools.items():
        for fam in cuts.HULL_FAMILIES[cuts.parse_hull(which)]:
            hits = sum(_weakened_detected(i, which, fam) for i in pool[:4])
            ok &= hits > 0
            lines.append(f"{which}-{fam} {hits}/{len(pool[:4])}")
    corrupt_bad = 0
    probes = [(K1[0], "F2", "full"), (K2[0], "F5", "full"), (K2[0], "F6U", "full"),
              (K2[0], "F6D", "full"), (GEN[0], "F7", "up"), (GEN[0], "F9", "up"),
              (GEN[0], "F8", "down"), (GEN[0], "F10", "down")]
    corrupted = 0
    for inst, fam, var in probes:
        for mem in cuts.enumerate_family(inst, fam):
            row = LinearInequality(mem.ineq.coeffs, mem.ineq.rhs - F(1, 10), "<=",
                                   mem.ineq.tag + "-corrupt", mem.ineq.dim)
            rep = verify.check_validity(row, inst, var)
            corrupted += 1
            w = rep.witnesses[0] if rep.witnesses else None
            if not (rep.refuted and w and row.violation(w["point"]) == w["violation"] > 0):
                corrupt_bad += 1
    ok &= corrupt_bad == 0
    record("C10 negative controls", ok,
           "weakened hulls detected: " + ", ".join(lines)
           + f"; corrupted members refuted {corrupted - corrupt_bad}/{corrupted}")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
