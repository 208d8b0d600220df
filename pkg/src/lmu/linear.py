"""Exact rational linear expressions, inequalities and conditioned expressions.

A constraint is stored one-sided as ``expr < 0`` or ``expr <= 0`` and scaled
so that the coefficient of its first variable (in name order) is +1 or -1;
ground constraints keep a constant of -1, 0 or 1.  Two constraints with the
same solution set and the same variables thus compare equal, which is what
lets :class:`ConstraintSet` deduplicate by plain set semantics.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

Point = Mapping[str, Fraction]

LT = "<"
LE = "<="


@dataclass(frozen=True)
class LinExpr:
    """``sum(c * x for x, c in coeffs) + const`` with no zero coefficients."""

    coeffs: tuple = ()
    const: Fraction = Fraction(0)

    @staticmethod
    def of(coeffs: Mapping[str, Fraction] | None = None, const=0) -> "LinExpr":
        items = tuple(sorted((k, Fraction(v)) for k, v in (coeffs or {}).items() if v != 0))
        return LinExpr(items, Fraction(const))

    @staticmethod
    def var(name: str) -> "LinExpr":
        return LinExpr(((name, Fraction(1)),), Fraction(0))

    @staticmethod
    def constant(q) -> "LinExpr":
        return LinExpr((), Fraction(q))

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    @property
    def vars(self) -> frozenset:
        return frozenset(k for k, _ in self.coeffs)

    def is_constant(self) -> bool:
        return not self.coeffs

    def coeff(self, name: str) -> Fraction:
        for k, v in self.coeffs:
            if k == name:
                return v
        return Fraction(0)

    def drop(self, name: str) -> "LinExpr":
        return LinExpr(tuple(kv for kv in self.coeffs if kv[0] != name), self.const)

    def __add__(self, other: "LinExpr") -> "LinExpr":
        if not other.coeffs:
            return LinExpr(self.coeffs, self.const + other.const)
        d = dict(self.coeffs)
        for k, v in other.coeffs:
            d[k] = d.get(k, 0) + v
        return LinExpr.of(d, self.const + other.const)

    def __neg__(self) -> "LinExpr":
        return LinExpr(tuple((k, -v) for k, v in self.coeffs), -self.const)

    def __sub__(self, other: "LinExpr") -> "LinExpr":
        return self + (-other)

    def scale(self, q) -> "LinExpr":
        q = Fraction(q)
        if q == 0:
            return LinExpr((), Fraction(0))
        return LinExpr(tuple((k, v * q) for k, v in self.coeffs), self.const * q)

    def evaluate(self, point: Point) -> Fraction:
        total = self.const
        for k, v in self.coeffs:
            try:
                total += v * point[k]
            except KeyError:
                raise KeyError(f"no value bound for variable {k!r}") from None
        return total

    def substitute(self, name: str, other: "LinExpr") -> "LinExpr":
        c = self.coeff(name)
        if c == 0:
            return self
        return self.drop(name) + other.scale(c)

    def __str__(self) -> str:
        parts = []
        for k, v in self.coeffs:
            if v == 1:
                parts.append(k)
            elif v == -1:
                parts.append(f"-{k}")
            else:
                parts.append(f"{v}*{k}")
        if self.const != 0 or not parts:
            parts.append(str(self.const))
        return " + ".join(parts).replace("+ -", "- ")


def eval_expr(e: LinExpr, p: Point) -> Fraction:
    return e.evaluate(p)


def substitute(e: LinExpr, x: str, e2: LinExpr) -> LinExpr:
    return e.substitute(x, e2)


@dataclass(frozen=True)
class Constraint:
    """Canonical one-sided inequality ``expr rel 0``.  Build with :func:`make`."""

    expr: LinExpr
    rel: str

    def sort_key(self):
        return (self.expr.coeffs, self.expr.const, self.rel)

    def holds(self, p: Point) -> bool:
        v = self.expr.evaluate(p)
        return v < 0 if self.rel == LT else v <= 0

    def is_ground(self) -> bool:
        return not self.expr.coeffs

    def negate(self) -> "Constraint":
        return make(-self.expr, LE if self.rel == LT else LT)

    def substitute(self, name: str, e: LinExpr) -> "Constraint":
        if self.expr.coeff(name) == 0:
            return self
        return make(self.expr.substitute(name, e), self.rel)

    @property
    def vars(self) -> frozenset:
        return self.expr.vars

    def __str__(self) -> str:
        return f"{self.expr} {self.rel} 0"


def make(expr: LinExpr, rel: str) -> Constraint:
    """Canonicalise ``expr rel 0``."""
    if rel not in (LT, LE):
        raise ValueError(f"bad relation {rel!r}")
    if expr.coeffs:
        lead = abs(expr.coeffs[0][1])
        if lead != 1:
            expr = expr.scale(1 / lead)
    elif expr.const != 0:
        expr = LinExpr((), Fraction(1 if expr.const > 0 else -1))
    return Constraint(expr, rel)


def lt(a: LinExpr, b: LinExpr) -> Constraint:
    return make(a - b, LT)


def le(a: LinExpr, b: LinExpr) -> Constraint:
    return make(a - b, LE)


def eq(a: LinExpr, b: LinExpr) -> list[Constraint]:
    """Equality as the pair ``a <= b`` and ``b <= a``."""
    return [le(a, b), le(b, a)]


def in_unit(name: str) -> list[Constraint]:
    x = LinExpr.var(name)
    return [le(LinExpr.constant(0), x), le(x, LinExpr.constant(1))]


def _drop_implied(items) -> frozenset:
    """Remove ``e <= 0`` when ``e < 0`` is also present."""
    strict = {c.expr for c in items if c.rel == LT}
    return frozenset(c for c in items if c.rel == LT or c.expr not in strict)


class ConstraintSet:
    """Immutable conjunction of canonical constraints.

    Ground constraints that are true are dropped on construction; a false
    ground constraint is kept, making the set unsatisfiable.
    """

    __slots__ = ("items", "_sorted", "_hash")

    def __init__(self, constraints: Iterable[Constraint] = ()):
        keep = set()
        for c in constraints:
            if c.is_ground() and _ground_true(c):
                continue
            keep.add(c)
        self.items = _drop_implied(keep)
        self._sorted = None
        self._hash = None

    def __iter__(self):
        if self._sorted is None:
            self._sorted = tuple(sorted(self.items, key=Constraint.sort_key))
        return iter(self._sorted)

    def __len__(self):
        return len(self.items)

    def __contains__(self, c):
        return c in self.items

    def __eq__(self, other):
        return isinstance(other, ConstraintSet) and self.items == other.items

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.items)
        return self._hash

    def __or__(self, other: "ConstraintSet | Iterable[Constraint]") -> "ConstraintSet":
        other_items = other.items if isinstance(other, ConstraintSet) else ConstraintSet(other).items
        out = ConstraintSet.__new__(ConstraintSet)
        out.items = _drop_implied(self.items | other_items)
        out._sorted = None
        out._hash = None
        return out

    def __le__(self, other: "ConstraintSet") -> bool:
        return self.items <= other.items

    def holds(self, p: Point) -> bool:
        return all(c.holds(p) for c in self.items)

    def substitute(self, name: str, e: LinExpr) -> "ConstraintSet":
        return ConstraintSet(c.substitute(name, e) for c in self.items)

    def trivially_false(self) -> bool:
        return any(c.is_ground() for c in self.items)

    @property
    def vars(self) -> frozenset:
        out = set()
        for c in self.items:
            out |= c.vars
        return frozenset(out)

    def __repr__(self):
        return f"ConstraintSet({list(self)!r})"

    def __str__(self):
        return "; ".join(str(c) for c in self)


def _ground_true(c: Constraint) -> bool:
    v = c.expr.const
    return v < 0 if c.rel == LT else v <= 0


def holds(cs: ConstraintSet, p: Point) -> bool:
    return cs.holds(p)


@dataclass(frozen=True)
class CLE:
    """Conditioned linear expression ``cond |- expr``: one piece of a function."""

    cond: ConstraintSet
    expr: LinExpr

    def applies(self, p: Point) -> bool:
        return self.cond.holds(p)

    def value(self, p: Point) -> Fraction:
        return self.expr.evaluate(p)

    def __str__(self):
        return f"{self.cond} |- {self.expr}" if len(self.cond) else f"|- {self.expr}"


@dataclass(frozen=True)
class Unique:
    """``x = e`` has exactly the solution ``f``."""

    f: LinExpr


@dataclass(frozen=True)
class Degenerate:
    """``x = x + rest``: solvable (by every x) iff ``rest == 0``."""

    rest: LinExpr


def solve_self(e: LinExpr, x: str) -> Unique | Degenerate:
    c = e.coeff(x)
    rest = e.drop(x)
    if c == 1:
        return Degenerate(rest)
    return Unique(rest.scale(1 / (1 - c)))
