"""Exact polyhedral primitives: vertex enumeration, affine rank, LP, hull membership.

Everything works on integer-scaled copies of the input rows, so no rounding
ever happens. Rows are ``(coeffs, rhs)`` pairs meaning ``coeffs . z <= rhs``
where ``coeffs`` is a sparse ``{index: Fraction}`` map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np


class Unbounded(Exception):
    """The H-polyhedron has recession directions (missing bound rows)."""

    def __init__(self, rays):
        super().__init__(f"polyhedron is unbounded ({len(rays)} extreme rays)")
        self.rays = rays


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def _int_row(coeffs: Mapping, rhs, n: int) -> list[int]:
    """``[rhs, -a_1, ..., -a_n]`` scaled to coprime integers (homogenized, >= 0 form)."""
    vals = [Fraction(rhs)] + [-Fraction(coeffs.get(j, 0)) for j in range(n)]
    den = 1
    for q in vals:
        den = _lcm(den, q.denominator)
    ints = [int(q * den) for q in vals]
    return _reduce(ints)


def _reduce(v: list[int]) -> list[int]:
    g = 0
    for a in v:
        g = math.gcd(g, a)
    if g > 1:
        v = [a // g for a in v]
    return v


def _dot(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(x * y for x, y in zip(a, b))


def as_rows(system) -> tuple[int, list[tuple[dict, Fraction]]]:
    """Normalize an InequalitySystem or ``(n, rows)`` pair to ``(n, le_rows)``."""
    if hasattr(system, "le_rows"):
        return system.dim, system.le_rows()
    n, rows = system
    return n, list(rows)


@dataclass
class VertexSet:
    points: list
    rays: list = field(default_factory=list)
    empty: bool = False

    def __len__(self):
        return len(self.points)


def _order_rows(rows):
    # sparse rows first, then by original position (callers pass tag order)
    return sorted(range(len(rows)), key=lambda i: (len(rows[i][0]), i))


def dd_enumerate(system, *, allow_rays: bool = False) -> VertexSet:
    """Vertices of ``{z : A z <= b}`` by the double description method.

    The polyhedron is homogenized to the cone ``{(lam, z): b lam - A z >= 0,
    lam >= 0}``; extreme rays with ``lam > 0`` are vertices, those with
    ``lam = 0`` are recession directions. With ``allow_rays=False`` a
    recession direction raises :class:`Unbounded`.
    """
    n, rows = as_rows(system)
    d = n + 1
    cons = [_int_row(a, b, n) for a, b in rows]
    cons.append([1] + [0] * n)  # lam >= 0
    order = _order_rows(rows) + [len(cons) - 1]
    # move the lam row to the front: it keeps the cone pointed from the start
    order = [order[-1]] + order[:-1]

    lineality: list[list[int]] = [[int(i == j) for j in range(d)] for i in range(d)]
    rays: list[list[int]] = []
    zsets: list[int] = []
    for step, ci in enumerate(order):
        h = cons[ci]
        bit = 1 << step
        k = next((idx for idx, l in enumerate(lineality) if _dot(h, l)), None)
        if k is not None:
            l0 = lineality.pop(k)
            hl0 = _dot(h, l0)
            if hl0 < 0:
                l0 = [-a for a in l0]
                hl0 = -hl0
            lineality = [_reduce([hl0 * a - _dot(h, l) * b for a, b in zip(l, l0)]) for l in lineality]
            new_rays = []
            for r in rays:
                hr = _dot(h, r)
                new_rays.append(_reduce([hl0 * a - hr * b for a, b in zip(r, l0)]) if hr else r)
            all_prev = bit - 1
            rays = new_rays + [l0]
            zsets = [z | bit for z in zsets] + [all_prev]
            continue
        vals = [_dot(h, r) for r in rays]
        pos = [i for i, v in enumerate(vals) if v > 0]
        neg = [i for i, v in enumerate(vals) if v < 0]
        zero = [i for i, v in enumerate(vals) if v == 0]
        if not neg:
            zsets = [z | bit if vals[i] == 0 else z for i, z in enumerate(zsets)]
            continue
        new_rays = [rays[i] for i in pos] + [rays[i] for i in zero]
        new_z = [zsets[i] for i in pos] + [zsets[i] | bit for i in zero]
        if pos:
            need = d - len(lineality) - 2
            for i, j in _adjacent_pairs(pos, neg, zsets, need):
                vp, vn = vals[i], vals[j]
                r = _reduce([vp * b - vn * a for a, b in zip(rays[i], rays[j])])
                new_rays.append(r)
                new_z.append((zsets[i] & zsets[j]) | bit)
        rays, zsets = new_rays, new_z
    if lineality:
        raise Unbounded(lineality)
    points, recession = [], []
    seen = set()
    for r in rays:
        if r[0] > 0:
            p = tuple(Fraction(a, r[0]) for a in r[1:])
            if p not in seen:
                seen.add(p)
                points.append(p)
        else:
            recession.append(tuple(Fraction(a) for a in r[1:]))
    if recession and not allow_rays:
        raise Unbounded(recession)
    points.sort()
    return VertexSet(points=points, rays=recession, empty=not points)


def _adjacent_pairs(pos, neg, zsets, need):
    """Pairs (p, n) whose rays are adjacent, by the combinatorial test.

    Candidates need ``|Z(p) & Z(n)| >= need``; a candidate is adjacent when no
    third ray's zero set contains ``Z(p) & Z(n)``.
    """
    nbits = max((z.bit_length() for z in zsets), default=0)
    if nbits == 0 or need <= 0:
        cand = [(i, j) for i in pos for j in neg]
    else:
        mat = np.zeros((len(zsets), nbits), dtype=np.int32)
        for r, z in enumerate(zsets):
            if z:
                bits = np.frombuffer(z.to_bytes((nbits + 7) // 8, "little"), dtype=np.uint8)
                mat[r] = np.unpackbits(bits, bitorder="little")[:nbits]
        P = mat[pos]
        N = mat[neg]
        counts = P @ N.T
        ii, jj = np.nonzero(counts >= need)
        cand = [(pos[a], neg[b]) for a, b in zip(ii.tolist(), jj.tolist())]
    if not cand:
        return []
    # column bitsets: which rays are tight on each constraint
    ncols = max(z.bit_length() for z in zsets) if zsets else 0
    colsets = [0] * ncols
    for r, z in enumerate(zsets):
        while z:
            low = z & -z
            c = low.bit_length() - 1
            colsets[c] |= 1 << r
            z ^= low
    everyone = (1 << len(zsets)) - 1
    out = []
    for i, j in cand:
        z = zsets[i] & zsets[j]
        members = everyone
        while z and members:
            low = z & -z
            members &= colsets[low.bit_length() - 1]
            z ^= low
        members &= ~((1 << i) | (1 << j))
        if not members:
            out.append((i, j))
    return out


def rank_of(vectors: Iterable[Sequence]) -> int:
    """Exact rank by fraction-free Gaussian elimination."""
    rows = []
    for v in vectors:
        fr = [Fraction(a) for a in v]
        den = 1
        for q in fr:
            den = _lcm(den, q.denominator)
        rows.append([int(q * den) for q in fr])
    rank = 0
    if not rows:
        return 0
    ncols = len(rows[0])
    for col in range(ncols):
        piv = next((r for r in range(rank, len(rows)) if rows[r][col]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        p = rows[rank]
        for r in range(rank + 1, len(rows)):
            f = rows[r][col]
            if f:
                rows[r] = _reduce([p[col] * a - f * b for a, b in zip(rows[r], p)])
        rank += 1
        if rank == len(rows):
            break
    return rank


def affine_rank(points: Sequence[Sequence]) -> int:
    """Dimension of the affine hull; 0 for a single point."""
    pts = list(points)
    if not pts:
        raise ValueError("affine_rank needs at least one point")
    base = pts[0]
    return rank_of([[a - b for a, b in zip(p, base)] for p in pts[1:]])


# ---------------------------------------------------------------------------
# linear programming


@dataclass
class LPResult:
    status: str                  # "optimal" | "infeasible" | "unbounded"
    objective: Fraction | None = None
    solution: tuple | None = None
    certificate: tuple | None = None   # row multipliers (optimal/infeasible) or a ray


class _Tableau:
    """Integer dictionary ``x_B = (M[i][0] + sum_j M[i][j] x_N(j)) / D``.

    Pivots use integer-preserving (Edmonds/Bareiss) updates, so every entry
    stays an integer and ``D`` is the running basis determinant (kept > 0).
    Column 0 is the constant; rows may be objective rows (not basic vars).
    """

    def __init__(self, rows, basic, nonbasic):
        self.M = rows
        self.D = 1
        self.basic = basic          # per row: variable label or None for objective rows
        self.nonbasic = nonbasic    # per column >= 1: variable label

    def pivot(self, r: int, k: int) -> None:
        M, D = self.M, self.D
        prow = M[r]
        p = prow[k]
        ncol = len(prow)
        for i, row in enumerate(M):
            if i == r:
                continue
            f = row[k]
            if f:
                M[i] = [(row[j] * p - f * prow[j]) // D for j in range(ncol)]
                M[i][k] = f
            elif p != D:
                M[i] = [(row[j] * p) // D for j in range(ncol)]
        new = [-a for a in prow]
        new[k] = D
        M[r] = new
        self.D = p
        self.basic[r], self.nonbasic[k] = self.nonbasic[k], self.basic[r]
        if p < 0:
            self.D = -p
            for i in range(len(M)):
                M[i] = [-a for a in M[i]]


def _bland(tab: _Tableau, obj_row: int, eligible_rows: list[int], ban: set):
    """Run Bland's rule on ``obj_row``; returns "optimal" or ("unbounded", column)."""
    M = tab.M
    while True:
        enter = None
        best = None
        for j in range(1, len(M[obj_row])):
            lab = tab.nonbasic[j]
            if lab in ban or M[obj_row][j] <= 0:
                continue
            if best is None or lab < best:
                best, enter = lab, j
        if enter is None:
            return "optimal"
        leave = None
        for i in eligible_rows:
            a = M[i][enter]
            if a >= 0:
                continue
            if leave is None:
                leave = i
                continue
            # ratio M[i][0] / -a versus M[leave][0] / -M[leave][enter]
            lhs = M[i][0] * (-M[leave][enter])
            rhs = M[leave][0] * (-a)
            if lhs < rhs or (lhs == rhs and tab.basic[i] < tab.basic[leave]):
                leave = i
        if leave is None:
            return ("unbounded", enter)
        tab.pivot(leave, enter)


def lp_solve(system, objective: Mapping, sense: str = "max") -> LPResult:
    """Exact simplex (Bland's least-index rule) for ``max/min c.z s.t. A z <= b``.

    Variables are free (split as ``z = z+ - z-``). ``certificate`` holds, for
    ``optimal``, multipliers ``y >= 0`` with ``y A = s c`` and
    ``y b = s * objective`` (``s = +1`` for max, ``-1`` for min); for
    ``infeasible``, ``y >= 0`` with ``y A = 0`` and ``y b < 0``; for
    ``unbounded``, a direction ``d`` with ``A d <= 0`` and ``s c.d > 0``.
    """
    if sense not in ("max", "min"):
        raise ValueError(f"sense must be 'max' or 'min', not {sense!r}")
    n, rows = as_rows(system)
    sign = 1 if sense == "max" else -1
    m = len(rows)
    # labels: slack s_i -> i, artificial x0 -> m, z+_j -> m+1+j, z-_j -> m+1+n+j
    # columns: 0 const, 1..n z+, n+1..2n z-, 2n+1 x0
    X0 = 2 * n + 1
    scale = []
    M = []
    for a, b in rows:
        vals = [Fraction(b)] + [Fraction(a.get(j, 0)) for j in range(n)]
        den = 1
        for q in vals:
            den = _lcm(den, q.denominator)
        scale.append(den)
        ints = [int(q * den) for q in vals]
        M.append([ints[0]] + [-v for v in ints[1:]] + ints[1:] + [1])
    cvals = [Fraction(objective.get(j, 0)) * sign for j in range(n)]
    cden = 1
    for q in cvals:
        cden = _lcm(cden, q.denominator)
    cints = [int(q * cden) for q in cvals]
    M.append([0] + cints + [-v for v in cints] + [0])
    M.append([0] * (2 * n + 1) + [-1])
    OBJ, PH1 = m, m + 1
    nonbasic = [None] + [m + 1 + j for j in range(2 * n)] + [m]
    tab = _Tableau(M, list(range(m)) + [None, None], nonbasic)
    slack_rows = list(range(m))
    worst = min(slack_rows, key=lambda i: (tab.M[i][0], i), default=None)
    if worst is not None and tab.M[worst][0] < 0:
        tab.pivot(worst, X0)
        status = _bland(tab, PH1, slack_rows, set())
        assert status == "optimal"
        if tab.M[PH1][0] < 0:
            return LPResult("infeasible", certificate=tuple(_row_duals(tab, PH1, m, scale)))
        if m in tab.basic:
            r = tab.basic.index(m)
            k = next((j for j in range(1, len(tab.M[r])) if tab.M[r][j]), None)
            if k is not None:
                tab.pivot(r, k)
    status = _bland(tab, OBJ, slack_rows, {m})
    if status != "optimal":
        enter = status[1]
        dplus = [Fraction(0)] * (2 * n)
        lab = tab.nonbasic[enter]
        if lab > m:
            dplus[lab - m - 1] = Fraction(1)
        for i, lab in enumerate(tab.basic):
            if lab is not None and lab > m:
                dplus[lab - m - 1] = Fraction(tab.M[i][enter], tab.D)
        d = tuple(dplus[j] - dplus[n + j] for j in range(n))
        return LPResult("unbounded", certificate=d)
    zpm = [Fraction(0)] * (2 * n)
    for i, lab in enumerate(tab.basic):
        if lab is not None and lab > m:
            zpm[lab - m - 1] = Fraction(tab.M[i][0], tab.D)
    z = tuple(zpm[j] - zpm[n + j] for j in range(n))
    value = Fraction(tab.M[OBJ][0], tab.D * cden) * sign
    y = tuple(q / cden for q in _row_duals(tab, OBJ, m, scale))
    return LPResult("optimal", objective=value, solution=z, certificate=y)


def _row_duals(tab: _Tableau, obj_row: int, m: int, scale) -> list[Fraction]:
    y = [Fraction(0)] * m
    for j in range(1, len(tab.M[obj_row])):
        lab = tab.nonbasic[j]
        if lab is not None and lab < m:
            y[lab] = Fraction(-tab.M[obj_row][j], tab.D) * scale[lab]
    return y


def in_convex_hull(p: Sequence, generators: Sequence[Sequence]):
    """Exact membership of ``p`` in ``conv(generators)``.

    Returns ``(True, weights)`` or ``(False, (a, b))`` where ``a.g <= b`` for
    every generator and ``a.p > b``.
    """
    gens = [tuple(Fraction(v) for v in g) for g in generators]
    if not gens:
        raise ValueError("in_convex_hull needs at least one generator")
    k, n = len(gens), len(p)
    # variables lam_0..lam_{k-1}; rows: -lam <= 0, G^T lam = p, sum lam = 1
    rows = []
    for i in range(k):
        rows.append(({i: Fraction(-1)}, Fraction(0)))
    eq = []
    for c in range(n):
        coeffs = {i: g[c] for i, g in enumerate(gens) if g[c]}
        eq.append((coeffs, Fraction(p[c])))
    eq.append(({i: Fraction(1) for i in range(k)}, Fraction(1)))
    for coeffs, rhs in eq:
        rows.append((coeffs, rhs))
        rows.append(({i: -v for i, v in coeffs.items()}, -rhs))
    res = lp_solve((k, rows), {}, "max")
    if res.status == "optimal":
        return True, res.solution
    # Farkas multipliers: y_eq+ - y_eq- give (a, -b) with a.g - b <= 0 < a.p - b
    y = res.certificate
    off = k
    w = []
    for e in range(n + 1):
        w.append(y[off + 2 * e] - y[off + 2 * e + 1])
    a = tuple(-wc for wc in w[:n])
    b = w[n]
    return False, (a, b)
