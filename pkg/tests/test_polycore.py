import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

import independent as ind
from ucpoly.formulation import build_mud_hull_base
from ucpoly.model import UCInstance
from ucpoly.oracle import hull_vertices
from ucpoly.polycore import Unbounded, affine_rank, dd_enumerate, in_convex_hull, lp_solve, rank_of


def cube(n):
    rows = []
    for i in range(n):
        rows.append(({i: F(1)}, F(1)))
        rows.append(({i: F(-1)}, F(0)))
    return (n, rows)


def simplex(n):
    rows = [({i: F(-1)}, F(0)) for i in range(n)]
    rows.append(({i: F(1) for i in range(n)}, F(1)))
    return (n, rows)


def test_cube_and_simplex():
    assert set(dd_enumerate(cube(3)).points) == set(itertools.product((0, 1), repeat=3))
    assert len(dd_enumerate(simplex(3)).points) == 4


def test_unbounded_raises():
    with pytest.raises(Unbounded):
        dd_enumerate((1, [({0: F(-1)}, F(0))]))


def test_empty_polytope():
    vs = dd_enumerate((1, [({0: F(1)}, F(0)), ({0: F(-1)}, F(-1))]))
    assert vs.empty and not vs.points


def test_mud_hull_vertices_match_brute_force():
    inst = UCInstance(T=3, L=1, ell=1, Cmin=F(1), Cmax=F(3), Vbar=F(2), V=F(2))
    sysm = build_mud_hull_base(inst)
    sub = sysm.restricted(range(inst.T, inst.space.dim))
    got = {tuple(map(int, p)) for p in dd_enumerate(sub).points}
    assert got == {y + u for y, u in ind.patterns(3, 1, 1)}


def _random_polytope(rng, n, m):
    rows = [r for r in cube(n)[1]]
    for _ in range(m):
        coeffs = {i: F(rng.randint(-3, 3)) for i in range(n)}
        rows.append((coeffs, F(rng.randint(1, 4), rng.randint(1, 3))))
    return rows


@settings(max_examples=25)
@given(st.integers(0, 10_000), st.integers(2, 3), st.integers(0, 4))
def test_dd_matches_basis_enumeration(seed, n, m):
    rows = _random_polytope(random.Random(seed), n, m)
    A = [[a.get(i, 0) for i in range(n)] for a, _ in rows]
    b = [rhs for _, rhs in rows]
    assert set(dd_enumerate((n, rows)).points) == ind.vertices(A, b)


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_dd_invariant_under_row_permutation(seed):
    rng = random.Random(seed)
    rows = _random_polytope(rng, 3, 3)
    shuffled = rows[:]
    rng.shuffle(shuffled)
    assert set(dd_enumerate((3, rows)).points) == set(dd_enumerate((3, shuffled)).points)


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_every_vertex_has_full_rank_tight_set(seed):
    rows = _random_polytope(random.Random(seed), 3, 3)
    for p in dd_enumerate((3, rows)).points:
        tight = [[a.get(i, 0) for i in range(3)] for a, b in rows
                 if sum(c * p[i] for i, c in a.items()) == b]
        assert rank_of(tight) == 3


def test_affine_rank_examples():
    assert affine_rank([(1, 2)]) == 0
    assert affine_rank([(0, 0), (1, 1), (2, 2)]) == 1
    inst = UCInstance(T=3, L=1, ell=1, Cmin=F(1), Cmax=F(3), Vbar=F(2), V=F(2))
    assert affine_rank([p.values for p in hull_vertices(inst)]) == 3 * 3 - 1


def test_lp_cube():
    res = lp_solve(cube(3), {0: 1})
    assert res.status == "optimal" and res.objective == 1
    assert lp_solve(cube(3), {0: 1, 1: 1}, "min").objective == 0


def test_lp_infeasible_certificate():
    rows = [({0: F(1)}, F(0)), ({0: F(-1)}, F(-1))]
    res = lp_solve((1, rows), {0: 1})
    assert res.status == "infeasible"
    y = res.certificate
    assert all(v >= 0 for v in y)
    assert sum(yi * a.get(0, 0) for yi, (a, _) in zip(y, rows)) == 0
    assert sum(yi * b for yi, (_, b) in zip(y, rows)) < 0


def test_lp_unbounded_ray():
    rows = [({0: F(-1)}, F(0))]
    res = lp_solve((1, rows), {0: 1})
    assert res.status == "unbounded" and res.certificate[0] > 0


def test_lp_dual_certificate():
    n, rows = simplex(3)
    res = lp_solve((n, rows), {0: 2, 1: 1, 2: 3})
    assert res.objective == 3
    y = res.certificate
    assert all(v >= 0 for v in y)
    assert sum(yi * b for yi, (_, b) in zip(y, rows)) == res.objective
    for j, c in enumerate((2, 1, 3)):
        assert sum(yi * a.get(j, 0) for yi, (a, _) in zip(y, rows)) == c


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_lp_agrees_with_vertex_scan(seed):
    rng = random.Random(seed)
    rows = _random_polytope(rng, 3, 3)
    obj = {i: F(rng.randint(-5, 5)) for i in range(3)}
    best = max(sum(obj[i] * p[i] for i in range(3)) for p in dd_enumerate((3, rows)).points)
    assert lp_solve((3, rows), obj).objective == best


def test_in_convex_hull():
    gens = [(0, 0), (2, 2)]
    ok, w = in_convex_hull((1, 1), gens)
    assert ok and sum(w) == 1 and all(v >= 0 for v in w)
    assert tuple(sum(wi * g[c] for wi, g in zip(w, gens)) for c in range(2)) == (1, 1)
    ok, (a, b) = in_convex_hull((1, 0), gens)
    assert not ok
    assert all(sum(ai * gi for ai, gi in zip(a, g)) <= b for g in gens)
    assert sum(ai * pi for ai, pi in zip(a, (1, 0))) > b
