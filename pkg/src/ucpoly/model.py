"""Instances, variable indexing and exact linear forms.

Every number in the package is a :class:`fractions.Fraction`. Variables are
laid out as ``x_1..x_T, y_1..y_T, u_2..u_T`` (``3T - 1`` ids in total).
"""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

Rational = Fraction

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?$")


class InstanceError(ValueError):
    """Raised for malformed instance or point documents."""


def parse_rational(value) -> Fraction:
    """Accept an int, a Fraction or a ``"p/q"`` / ``"p"`` string."""
    if isinstance(value, bool):
        raise InstanceError(f"not a rational: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        m = _RATIONAL_RE.match(value)
        if m:
            den = int(m.group(2)) if m.group(2) else 1
            if den == 0:
                raise InstanceError(f"zero denominator in {value!r}")
            return Fraction(int(m.group(1)), den)
    raise InstanceError(f"not a rational (use an integer or 'p/q'): {value!r}")


def format_rational(q: Fraction):
    """Integer when integral, ``"p/q"`` otherwise (round-trips through parse_rational)."""
    q = Fraction(q)
    return q.numerator if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def rat_str(q: Fraction) -> str:
    return str(format_rational(q))


class Regime(str, enum.Enum):
    K1 = "K1"            # V = Cmax - Cmin
    K2 = "K2"            # Cmax = Cmin + 2V and Vbar = Cmin
    SUBHULL = "SUBHULL"  # V < Cmax - Cmin, not K2
    GENERAL = "GENERAL"


@dataclass(frozen=True)
class UCInstance:
    T: int
    L: int
    ell: int
    Cmax: Fraction
    Cmin: Fraction
    Vbar: Fraction
    V: Fraction

    def __post_init__(self):
        for name in ("Cmax", "Cmin", "Vbar", "V"):
            object.__setattr__(self, name, parse_rational(getattr(self, name)))
        validate_instance(self)

    @property
    def regime(self) -> Regime:
        return classify_regime(self)

    @property
    def space(self) -> "VariableSpace":
        return VariableSpace(self.T)

    def to_doc(self) -> dict:
        return {
            "T": self.T, "L": self.L, "ell": self.ell,
            "Cmin": format_rational(self.Cmin), "Cmax": format_rational(self.Cmax),
            "Vbar": format_rational(self.Vbar), "V": format_rational(self.V),
        }

    def summary(self) -> str:
        d = self.to_doc()
        return ", ".join(f"{k}={d[k]}" for k in ("T", "L", "ell", "Cmin", "Cmax", "Vbar", "V"))


def _is_k2(Cmax, Cmin, Vbar, V) -> bool:
    return Cmax == Cmin + 2 * V and Vbar == Cmin


def validate_instance(inst: UCInstance) -> None:
    for name in ("T", "L", "ell"):
        v = getattr(inst, name)
        if isinstance(v, bool) or not isinstance(v, int):
            raise InstanceError(f"{name} must be an integer, got {v!r}")
    if inst.T < 2:
        raise InstanceError(f"T >= 2 violated (T={inst.T})")
    if inst.L < 1:
        raise InstanceError(f"L >= 1 violated (L={inst.L})")
    if inst.ell < 1:
        raise InstanceError(f"ell >= 1 violated (ell={inst.ell})")
    if inst.L > inst.T:
        raise InstanceError(f"L <= T violated (L={inst.L}, T={inst.T})")
    if inst.ell > inst.T:
        raise InstanceError(f"ell <= T violated (ell={inst.ell}, T={inst.T})")
    Cmin, Cmax, Vbar, V = inst.Cmin, inst.Cmax, inst.Vbar, inst.V
    if Cmin < 0:
        raise InstanceError(f"Cmin >= 0 violated (Cmin={rat_str(Cmin)})")
    if V <= 0:
        raise InstanceError(f"V > 0 violated (V={rat_str(V)})")
    # Vbar = Cmin is admitted only in the K2 setting, where it is part of the definition.
    if not (Cmin < Vbar or _is_k2(Cmax, Cmin, Vbar, V)):
        raise InstanceError(f"Cmin < Vbar violated (Cmin={rat_str(Cmin)}, Vbar={rat_str(Vbar)})")
    if not Vbar < Cmin + V:
        raise InstanceError(
            f"Vbar < Cmin + V violated (Vbar={rat_str(Vbar)}, Cmin + V={rat_str(Cmin + V)})")
    if Cmax - Cmin - V < 0:
        raise InstanceError(
            f"Cmax - Cmin - V >= 0 violated (Cmax - Cmin={rat_str(Cmax - Cmin)}, V={rat_str(V)})")


def instance_from_doc(doc: Mapping) -> UCInstance:
    if not isinstance(doc, Mapping):
        raise InstanceError("instance document must be a JSON object")
    keys = ("T", "L", "ell", "Cmin", "Cmax", "Vbar", "V")
    missing = [k for k in keys if k not in doc]
    if missing:
        raise InstanceError(f"instance document missing keys: {', '.join(missing)}")
    extra = sorted(set(doc) - set(keys))
    if extra:
        raise InstanceError(f"unknown instance keys: {', '.join(extra)}")
    return UCInstance(T=doc["T"], L=doc["L"], ell=doc["ell"],
                      Cmax=parse_rational(doc["Cmax"]), Cmin=parse_rational(doc["Cmin"]),
                      Vbar=parse_rational(doc["Vbar"]), V=parse_rational(doc["V"]))


def load_instance(text: str) -> UCInstance:
    """Parse and validate an instance JSON document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"parse error: {exc}") from exc
    return instance_from_doc(doc)


def classify_regime(inst: UCInstance) -> Regime:
    span = inst.Cmax - inst.Cmin
    if inst.V == span:
        return Regime.K1
    if _is_k2(inst.Cmax, inst.Cmin, inst.Vbar, inst.V):
        return Regime.K2
    if inst.V < span:
        return Regime.SUBHULL
    return Regime.GENERAL


@dataclass(frozen=True)
class DerivedConstants:
    kappa: int
    gamma: int
    alpha1: int
    alpha2: int
    grid: frozenset

    def in_grid(self, value: Fraction) -> bool:
        return Fraction(value) in self.grid


def _ceil(q: Fraction) -> int:
    return -((-q.numerator) // q.denominator)


def _floor(q: Fraction) -> int:
    return q.numerator // q.denominator


def derive_constants(inst: UCInstance) -> DerivedConstants:
    ratio = (inst.Cmax - inst.Cmin) / inst.V
    kappa = _ceil(ratio) - 1
    gamma = _floor(ratio)
    alpha1 = max((n for n in range(1, inst.T + 1) if inst.Cmin + n * inst.V <= inst.Cmax), default=0)
    alpha2 = max((n for n in range(1, inst.T + 1) if inst.Vbar + n * inst.V <= inst.Cmax), default=0)
    grid = {Fraction(0)}
    grid.update(inst.Cmin + n * inst.V for n in range(alpha1 + 1))
    grid.update(inst.Vbar + n * inst.V for n in range(alpha2 + 1))
    grid.update(inst.Cmax - n * inst.V for n in range(alpha1 + 1))
    return DerivedConstants(kappa, gamma, alpha1, alpha2, frozenset(grid))


def floor_div(a: Fraction, b: Fraction) -> int:
    return _floor(Fraction(a) / Fraction(b))


def pos(a: int) -> int:
    return max(a, 0)


_NAME_RE = re.compile(r"^([xyu])(\d+)$")


@dataclass(frozen=True)
class VariableSpace:
    """Bijection between ids ``0..3T-2`` and the symbols x_t, y_t, u_t."""

    T: int

    @property
    def dim(self) -> int:
        return 3 * self.T - 1

    def x(self, t: int) -> int:
        if not 1 <= t <= self.T:
            raise IndexError(f"x_{t} outside [1, {self.T}]")
        return t - 1

    def y(self, t: int) -> int:
        if not 1 <= t <= self.T:
            raise IndexError(f"y_{t} outside [1, {self.T}]")
        return self.T + t - 1

    def u(self, t: int) -> int:
        if not 2 <= t <= self.T:
            raise IndexError(f"u_{t} outside [2, {self.T}]")
        return 2 * self.T + t - 2

    def name(self, vid: int) -> str:
        T = self.T
        if 0 <= vid < T:
            return f"x{vid + 1}"
        if T <= vid < 2 * T:
            return f"y{vid - T + 1}"
        if 2 * T <= vid < 3 * T - 1:
            return f"u{vid - 2 * T + 2}"
        raise IndexError(f"variable id {vid} outside space of dimension {self.dim}")

    def parse(self, name: str) -> int:
        m = _NAME_RE.match(name)
        if not m:
            raise KeyError(name)
        return getattr(self, m.group(1))(int(m.group(2)))

    def names(self) -> list[str]:
        return [self.name(i) for i in range(self.dim)]


@dataclass(frozen=True)
class Point:
    values: tuple

    def __post_init__(self):
        vals = tuple(Fraction(v) for v in self.values)
        if len(vals) % 3 != 2:
            raise ValueError(f"a point needs 3T-1 coordinates, got {len(vals)}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_xyu(cls, x, y, u) -> "Point":
        if len(y) != len(x) or len(u) != len(x) - 1:
            raise ValueError("point needs |x| = |y| = T and |u| = T-1")
        return cls(tuple(x) + tuple(y) + tuple(u))

    @property
    def T(self) -> int:
        return (len(self.values) + 1) // 3

    @property
    def x(self) -> tuple:
        return self.values[: self.T]

    @property
    def y(self) -> tuple:
        return self.values[self.T: 2 * self.T]

    @property
    def u(self) -> tuple:
        return self.values[2 * self.T:]

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def binary_part(self) -> tuple:
        return self.values[self.T:]

    def is_binary(self) -> bool:
        return all(v in (0, 1) for v in self.binary_part())

    def to_doc(self) -> dict:
        return {k: [format_rational(v) for v in getattr(self, k)] for k in ("x", "y", "u")}

    @classmethod
    def from_doc(cls, doc: Mapping, T: int | None = None) -> "Point":
        try:
            x, y, u = ([parse_rational(v) for v in doc[k]] for k in ("x", "y", "u"))
        except (KeyError, TypeError) as exc:
            raise InstanceError(f"point document needs lists x, y, u: {exc}") from exc
        if T is not None and len(x) != T:
            raise InstanceError(f"point has T={len(x)}, instance has T={T}")
        if len(y) != len(x) or len(u) != len(x) - 1:
            raise InstanceError("point document needs |x| = |y| = T and |u| = T-1")
        return cls.from_xyu(x, y, u)

    def __str__(self):
        fmt = lambda vs: ",".join(rat_str(v) for v in vs)  # noqa: E731
        return f"x=({fmt(self.x)}) y=({fmt(self.y)}) u=({fmt(self.u)})"


class LinExpr(dict):
    """Mutable accumulator ``{var_id: Fraction}`` used while building rows."""

    def add(self, vid: int, coef) -> "LinExpr":
        coef = Fraction(coef)
        if coef:
            new = self.get(vid, Fraction(0)) + coef
            if new:
                self[vid] = new
            else:
                self.pop(vid, None)
        return self

    def add_expr(self, other: Mapping, scale=1) -> "LinExpr":
        for vid, c in other.items():
            self.add(vid, c * scale)
        return self


SENSES = ("<=", ">=", "=")


@dataclass(frozen=True)
class LinearInequality:
    """``sum coeffs[v] * z_v  (sense)  rhs`` with a provenance tag."""

    coeffs: Mapping
    rhs: Fraction
    sense: str = "<="
    tag: str = ""
    dim: int | None = None

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"unknown sense {self.sense!r}")
        clean = {int(k): Fraction(v) for k, v in sorted(self.coeffs.items()) if v != 0}
        object.__setattr__(self, "coeffs", clean)
        object.__setattr__(self, "rhs", Fraction(self.rhs))

    def lhs_value(self, p) -> Fraction:
        vals = p.values if isinstance(p, Point) else p
        if self.dim is not None and len(vals) != self.dim:
            raise ValueError(f"dimension mismatch: row over {self.dim} vars, point has {len(vals)}")
        if self.coeffs and max(self.coeffs) >= len(vals):
            raise ValueError(f"dimension mismatch: row uses id {max(self.coeffs)}, point has {len(vals)}")
        return sum((c * vals[v] for v, c in self.coeffs.items()), Fraction(0))

    def le_rows(self) -> list[tuple[dict, Fraction]]:
        """The row as one or two ``a.z <= b`` pairs."""
        if self.sense == "<=":
            return [(dict(self.coeffs), self.rhs)]
        neg = {v: -c for v, c in self.coeffs.items()}
        if self.sense == ">=":
            return [(neg, -self.rhs)]
        return [(dict(self.coeffs), self.rhs), (neg, -self.rhs)]

    def violation(self, p) -> Fraction:
        """Amount by which ``p`` violates the row (<= 0 means satisfied)."""
        lhs = self.lhs_value(p)
        if self.sense == "<=":
            return lhs - self.rhs
        if self.sense == ">=":
            return self.rhs - lhs
        return abs(lhs - self.rhs)

    def normalized_key(self) -> tuple:
        """Positive-scaling-invariant key: integer coefficients divided by their gcd."""
        nums = list(self.coeffs.values()) + [self.rhs]
        lcm = 1
        for q in nums:
            lcm = lcm * q.denominator // math.gcd(lcm, q.denominator)
        ints = [int(q * lcm) for q in nums]
        g = 0
        for v in ints:
            g = math.gcd(g, v)
        g = g or 1
        items = tuple((v, c // g) for v, c in zip(self.coeffs, ints[:-1]))
        return (self.sense, items, ints[-1] // g)

    def with_tag(self, tag: str) -> "LinearInequality":
        return LinearInequality(self.coeffs, self.rhs, self.sense, tag, self.dim)

    def format(self, space: VariableSpace | None = None) -> str:
        name = space.name if space else (lambda v: f"z{v}")
        if not self.coeffs:
            body = "0"
        else:
            parts = []
            for v, c in self.coeffs.items():
                mag = "" if abs(c) == 1 else f"{rat_str(abs(c))}*"
                parts.append(f"{'+' if c > 0 else '-'} {mag}{name(v)}")
            body = " ".join(parts)
            body = body[2:] if body.startswith("+ ") else "-" + body[2:]
        return f"{self.tag}: {body} {self.sense} {rat_str(self.rhs)}"


def make_le(lhs: Mapping, rhs_expr: Mapping, const=0, tag: str = "", dim: int | None = None
            ) -> LinearInequality:
    """Build ``lhs <= rhs_expr + const`` as ``lhs - rhs_expr <= const``."""
    e = LinExpr()
    e.add_expr(lhs)
    e.add_expr(rhs_expr, -1)
    return LinearInequality(e, Fraction(const), "<=", tag, dim)


def eval_inequality(ineq: LinearInequality, p: Point) -> tuple[Fraction, bool, bool]:
    """Exact ``(lhs, satisfied, tight)`` for ``ineq`` at ``p``."""
    lhs = ineq.lhs_value(p)
    tight = lhs == ineq.rhs
    if ineq.sense == "<=":
        ok = lhs <= ineq.rhs
    elif ineq.sense == ">=":
        ok = lhs >= ineq.rhs
    else:
        ok = tight
    return lhs, ok, tight


def points_to_jsonl(points: Iterable[Point]) -> str:
    return "".join(json.dumps(p.to_doc()) + "\n" for p in points)
