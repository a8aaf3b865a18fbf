import random
from fractions import Fraction as F

import pytest

import independent as ind
from ucpoly import cuts
from ucpoly.model import Point, UCInstance, derive_constants
from ucpoly.oracle import (BinaryPattern, OracleCapError, candidate_points, enumerate_patterns,
                           extreme_points, fiber_vertices, grid_check, hull_vertices,
                           k1_characterized_points, online_intervals, oracle_optimize,
                           scenario_tree_points_k2up)
from ucpoly.polycore import in_convex_hull, lp_solve
from ucpoly.verify import random_objective


def inst(T=3, L=1, ell=1, Cmin=1, Cmax=3, Vbar=2, V=2):
    return UCInstance(T=T, L=L, ell=ell, Cmin=F(Cmin), Cmax=F(Cmax), Vbar=F(Vbar), V=F(V))


K1_T3 = inst()
GEN_T4 = inst(T=4, Vbar=F(3, 2), V=1)


def test_patterns_T2_golden():
    pats = enumerate_patterns(inst(T=2))
    assert len(pats) == len(ind.patterns(2, 1, 1)) == 4
    assert BinaryPattern((0, 0), (0,)) in pats
    assert BinaryPattern((0, 1), (0,)) not in pats


@pytest.mark.parametrize("T,L,ell", [(3, 1, 1), (4, 2, 1), (4, 1, 3), (5, 2, 2)])
def test_patterns_match_hand_checker(T, L, ell):
    got = {(p.y, p.u) for p in enumerate_patterns(inst(T=T, L=L, ell=ell))}
    assert got == set(ind.patterns(T, L, ell))


def test_cap():
    with pytest.raises(OracleCapError):
        enumerate_patterns(inst(T=8))
    assert enumerate_patterns(inst(T=3), cap=3)


def test_fiber_vertices_offline():
    pts = fiber_vertices(K1_T3, BinaryPattern((0, 0, 0), (0, 0)))
    assert [p.x for p in pts] == [(0, 0, 0)]


def test_fiber_vertices_k1_box():
    pts = fiber_vertices(inst(T=2), BinaryPattern((1, 1), (0,)))
    assert {p.x for p in pts} == {(1, 1), (1, 3), (3, 1), (3, 3)}


def test_fiber_up_differs_from_full():
    i = inst(T=3, Vbar=F(3, 2), V=1)
    pat = BinaryPattern((1, 1, 1), (0, 0))
    full = {p.x for p in fiber_vertices(i, pat)}
    up = {p.x for p in fiber_vertices(i, pat, "up")}
    # without the ramp-down row the output may drop from Cmax to Cmin at once
    assert (3, 1, 1) in up - full
    assert all(b - a <= 1 for x in full for a, b in zip(x[1:], x))


def test_extreme_points_k1_T3_golden():
    pts = hull_vertices(K1_T3)
    assert len(pts) == 27
    assert {p.values for p in pts} == ind.extreme_points(K1_T3)


@pytest.mark.parametrize("variant,up,down", [("full", 1, 1), ("up", 1, 0), ("down", 0, 1)])
def test_extreme_points_match_independent_oracle(variant, up, down):
    i = inst(T=4, L=2, ell=1, Vbar=F(3, 2), V=1)
    assert {p.values for p in hull_vertices(i, variant)} == ind.extreme_points(i, up, down)


def test_extreme_subset_of_candidates_and_feasible():
    from ucpoly.formulation import build_base
    cands = candidate_points(GEN_T4, "up")
    ext = extreme_points(cands)
    assert ext and set(ext) <= set(cands.points)
    base = build_base(GEN_T4, "up")
    assert all(base.is_feasible(p) for p in cands.points)


def test_lp_filter_agrees_with_structural():
    cands = candidate_points(inst(T=3, Vbar=F(3, 2), V=1), "up")
    assert set(extreme_points(cands, "lp")) == set(extreme_points(cands))
    assert len(set(cands.points)) == len(cands.points)


def test_no_candidate_is_a_combination_of_its_group():
    cands = candidate_points(K1_T3)
    groups = {}
    for p in cands.points:
        groups.setdefault(p.binary_part(), []).append(p)
    for pts in groups.values():
        for p in pts:
            rest = [q.values for q in pts if q != p]
            assert not rest or not in_convex_hull(p.values, rest)[0]


def test_k1_conditions_hold_on_extreme_points():
    for p in hull_vertices(K1_T3):
        for a, b in online_intervals(p.y).intervals:
            for t in range(a, b + 1):
                v = p.x[t - 1]
                if t in (a, b) and (a > 1 or t == b):
                    assert v in (K1_T3.Cmin, K1_T3.Vbar, K1_T3.Cmax)
                else:
                    assert v in (K1_T3.Cmin, K1_T3.Cmax)
        assert all(x == 0 for x, y in zip(p.x, p.y) if y == 0)


@pytest.mark.parametrize("T,L,ell", [(3, 1, 1), (4, 2, 2), (5, 2, 1)])
def test_k1_characterization_contains_extreme_points(T, L, ell):
    i = inst(T=T, L=L, ell=ell)
    char = set(k1_characterized_points(i))
    assert set(hull_vertices(i)) <= char


def test_scenario_trees_contain_extreme_points():
    i = inst(T=4, L=1, ell=1, Cmin=1, Cmax=3, Vbar=F(3, 2), V=1)
    gen = set(scenario_tree_points_k2up(i))
    assert set(hull_vertices(i, "up")) <= gen


def test_scenario_trees_with_vbar_equal_cmin():
    i = inst(T=3, L=1, ell=2, Cmin=2, Cmax=7, Vbar=2, V=F(5, 2))
    gen = set(scenario_tree_points_k2up(i))
    assert Point.from_xyu([F(9, 2), 7, 0], [1, 1, 0], [0, 0]) in gen
    assert set(hull_vertices(i, "up")) == gen


def test_scenario_tree_startup_branch():
    i = inst(T=4, L=1, ell=1, Cmin=1, Cmax=3, Vbar=F(3, 2), V=1)
    nexts = set()
    for p in hull_vertices(i, "up"):
        for m in range(2, i.T - 1):
            if p.u[m - 2] == 1 and p.x[m - 1] == i.Vbar and p.x[m] == i.Cmin + i.V and p.y[m + 1]:
                nexts.add(p.x[m + 1])
    assert nexts == {i.Cmax}


def test_single_interval_from_start_has_no_startup_value():
    i = inst(T=3, L=1, ell=1, Cmin=1, Cmax=3, Vbar=F(3, 2), V=1)
    pts = [p for p in scenario_tree_points_k2up(i) if p.y == (1, 1, 1)]
    assert pts and all(p.x[0] in (i.Cmin, i.Cmin + i.V, i.Cmax) for p in pts)


def test_grid():
    i = inst(T=4, Vbar=F(3, 2), V=1)
    assert derive_constants(i).grid == {0, 1, F(3, 2), 2, F(5, 2), 3}
    for v in ("up", "down"):
        assert grid_check(hull_vertices(i, v), i)["ok"]
    bad = Point.from_xyu([F(7, 4), 0, 0, 0], [1, 0, 0, 0], [0, 0, 0])
    rep = grid_check([bad], i)
    assert not rep["ok"] and rep["violators"] == [{"point": 0, "t": 1, "value": F(7, 4)}]


def test_oracle_optimize_examples():
    assert oracle_optimize(K1_T3, "full", {}).objective == 0
    res = oracle_optimize(K1_T3, "full", {t: 1 for t in range(3)})
    assert res.objective == 9


def test_oracle_agrees_with_hull_lp():
    i = inst(T=4, L=2, ell=2)
    hull = cuts.assemble_hull(i, "q-k1")
    rng = random.Random(17)
    for _ in range(100):
        obj = random_objective(rng, i.space.dim)
        assert lp_solve(hull, obj).objective == oracle_optimize(i, "full", obj).objective
