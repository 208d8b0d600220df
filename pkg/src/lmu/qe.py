"""Second backend: mu-terms as formulas of rational linear arithmetic.

A term ``t`` over context ``x1..xn`` is translated to a formula
``F_t(x1..xn, y)`` defining its graph on the unit cube.  Quantifiers are
eliminated over conjunctions by Fourier-Motzkin, keeping every intermediate
quantifier-free formula in disjunctive normal form with infeasible conjuncts
pruned.  From the result one reads off either the unique value ``y`` (for a
fixed input) or a whole representing system of conditioned linear
expressions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from lmu.errors import InvariantViolation
from lmu.linear import (
    CLE,
    LE,
    LT,
    Constraint,
    ConstraintSet,
    LinExpr,
    Point,
    in_unit,
    make,
)
from lmu.terms import Join, Meet, Mu, Nu, ODot, OPlus, One, Scalar, Term, Var, Zero

# ------------------------------------------------------------- formulas


@dataclass(frozen=True)
class FOFormula:
    pass


@dataclass(frozen=True)
class Atom(FOFormula):
    lhs: LinExpr
    rel: str
    rhs: LinExpr

    def constraint(self) -> Constraint:
        return make(self.lhs - self.rhs, self.rel)


@dataclass(frozen=True)
class And(FOFormula):
    args: tuple


@dataclass(frozen=True)
class Or(FOFormula):
    args: tuple


@dataclass(frozen=True)
class Not(FOFormula):
    arg: FOFormula


@dataclass(frozen=True)
class Exists(FOFormula):
    var: str
    body: FOFormula


@dataclass(frozen=True)
class Forall(FOFormula):
    var: str
    body: FOFormula


TRUE = And(())
FALSE = Or(())


def conj(*args) -> FOFormula:
    return And(tuple(args))


def disj(*args) -> FOFormula:
    return Or(tuple(args))


def implies(a: FOFormula, b: FOFormula) -> FOFormula:
    return Or((Not(a), b))


def atom_le(a: LinExpr, b: LinExpr) -> Atom:
    return Atom(a, LE, b)


def atom_lt(a: LinExpr, b: LinExpr) -> Atom:
    return Atom(a, LT, b)


def atom_eq(a: LinExpr, b: LinExpr) -> FOFormula:
    return And((Atom(a, LE, b), Atom(b, LE, a)))


def from_constraint(c: Constraint) -> Atom:
    return Atom(c.expr, c.rel, LinExpr.constant(0))


def rename(f: FOFormula, mapping: dict) -> FOFormula:
    """Substitute linear expressions for free variables."""
    match f:
        case Atom(lhs=l, rel=r, rhs=h):
            for k, v in mapping.items():
                l = l.substitute(k, v)
                h = h.substitute(k, v)
            return Atom(l, r, h)
        case And(args=a):
            return And(tuple(rename(g, mapping) for g in a))
        case Or(args=a):
            return Or(tuple(rename(g, mapping) for g in a))
        case Not(arg=g):
            return Not(rename(g, mapping))
        case Exists(var=v, body=b) | Forall(var=v, body=b):
            inner = {k: e for k, e in mapping.items() if k != v}
            return type(f)(v, rename(b, inner))
    raise TypeError(f"not a formula: {f!r}")


def formula_size(f: FOFormula) -> int:
    match f:
        case Atom(lhs=l, rhs=h):
            return 1 + len(l.coeffs) + len(h.coeffs)
        case And(args=a) | Or(args=a):
            return 1 + sum(formula_size(g) for g in a)
        case Not(arg=g):
            return 1 + formula_size(g)
        case Exists(body=b) | Forall(body=b):
            return 1 + formula_size(b)
    raise TypeError(f"not a formula: {f!r}")


def is_quantifier_free(f: FOFormula) -> bool:
    match f:
        case Atom():
            return True
        case And(args=a) | Or(args=a):
            return all(is_quantifier_free(g) for g in a)
        case Not(arg=g):
            return is_quantifier_free(g)
    return False


def holds_qf(f: FOFormula, p: Point) -> bool:
    """Truth of a quantifier-free formula at a point."""
    match f:
        case Atom():
            return f.constraint().holds(p)
        case And(args=a):
            return all(holds_qf(g, p) for g in a)
        case Or(args=a):
            return any(holds_qf(g, p) for g in a)
        case Not(arg=g):
            return not holds_qf(g, p)
    raise ValueError("formula has quantifiers")


def to_text(f: FOFormula) -> str:
    match f:
        case Atom(lhs=l, rel=r, rhs=h):
            return f"{l} {r} {h}"
        case And(args=()):
            return "true"
        case Or(args=()):
            return "false"
        case And(args=a):
            return "(" + " & ".join(to_text(g) for g in a) + ")"
        case Or(args=a):
            return "(" + " | ".join(to_text(g) for g in a) + ")"
        case Not(arg=g):
            return f"~{to_text(g)}"
        case Exists(var=v, body=b):
            return f"(exists {v}. {to_text(b)})"
        case Forall(var=v, body=b):
            return f"(forall {v}. {to_text(b)})"
    raise TypeError(f"not a formula: {f!r}")


# ------------------------------------------------------ graph formulas


class _Fresh:
    def __init__(self, prefix: str = "_z"):
        self.prefix = prefix
        self.counter = itertools.count(1)

    def __call__(self) -> str:
        # A leading underscore cannot occur in parsed identifiers.
        return f"{self.prefix}{next(self.counter)}"


def _v(name: str) -> LinExpr:
    return LinExpr.var(name)


_0 = LinExpr.constant(0)
_1 = LinExpr.constant(1)


def _range(names: Sequence[str]) -> list[FOFormula]:
    return [from_constraint(c) for x in names for c in in_unit(x)]


def _combine(t: Term, y: LinExpr, z1: LinExpr, z2: LinExpr) -> FOFormula:
    """Output relation of a binary connective, as in the strong-disjunction case."""
    s = z1 + z2
    match t:
        case OPlus():
            return disj(conj(atom_le(s, _1), atom_eq(y, s)), conj(atom_le(_1, s), atom_eq(y, _1)))
        case ODot():
            return disj(conj(atom_le(_1, s), atom_eq(y, s - _1)), conj(atom_le(s, _1), atom_eq(y, _0)))
        case Join():
            return disj(conj(atom_le(z2, z1), atom_eq(y, z1)), conj(atom_le(z1, z2), atom_eq(y, z2)))
        case Meet():
            return disj(conj(atom_le(z1, z2), atom_eq(y, z1)), conj(atom_le(z2, z1), atom_eq(y, z2)))
    raise TypeError(t)


def graph_formula(t: Term, ctx: Sequence[str], y: str = "_y") -> FOFormula:
    """``F_t(ctx, y)``: true exactly on ``{(x, y) in [0,1]^(n+1) | t(x) = y}``."""
    missing = t.fv - set(ctx)
    if missing:
        raise ValueError(f"free variables {sorted(missing)} not in context")
    if y in ctx:
        raise ValueError(f"output variable {y!r} clashes with the context")
    fresh = _Fresh()

    def go(u: Term, ctx: tuple, out: str) -> FOFormula:
        yv = _v(out)
        match u:
            case Var(name=x):
                return conj(*_range(ctx), atom_eq(yv, _v(x)))
            case Zero():
                return conj(*_range(ctx), atom_eq(yv, _0))
            case One():
                return conj(*_range(ctx), atom_eq(yv, _1))
            case Scalar(q=q, body=b):
                z = fresh()
                return Exists(z, conj(go(b, ctx, z), atom_eq(yv, _v(z).scale(q))))
            case OPlus(left=l, right=r) | ODot(left=l, right=r) | Join(left=l, right=r) | Meet(left=l, right=r):
                z1, z2 = fresh(), fresh()
                body = conj(go(l, ctx, z1), go(r, ctx, z2), _combine(u, yv, _v(z1), _v(z2)))
                return Exists(z1, Exists(z2, body))
            case Mu(var=x, body=b) | Nu(var=x, body=b):
                inner_out = fresh()
                fb = go(b, ctx + (x,), inner_out)
                z = fresh()
                at_y = rename(fb, {x: yv, inner_out: yv})
                at_z = rename(fb, {x: _v(z), inner_out: _v(z)})
                bound = atom_le(yv, _v(z)) if isinstance(u, Mu) else atom_le(_v(z), yv)
                return conj(at_y, Forall(z, implies(at_z, bound)))
        raise TypeError(f"not a term: {u!r}")

    return go(t, tuple(ctx), y)


# --------------------------------------------------- conjunction algebra


def _tighten(constraints) -> ConstraintSet:
    """Keep only the tightest of parallel constraints (same coefficients)."""
    best: dict = {}
    for c in constraints:
        key = c.expr.coeffs
        if not key:
            best[(key, c.expr.const, c.rel)] = c
            continue
        cur = best.get(key)
        if cur is None:
            best[key] = c
            continue
        # expr = a.x + k rel 0; larger k, then strictness, is tighter.
        if (c.expr.const, c.rel == LT) > (cur.expr.const, cur.rel == LT):
            best[key] = c
    return ConstraintSet(best.values())


def _bounds(cs, z: str):
    lowers, uppers, rest = [], [], []
    for c in cs:
        a = c.expr.coeff(z)
        if a == 0:
            rest.append(c)
            continue
        b = c.expr.drop(z).scale(-1 / a)
        (uppers if a > 0 else lowers).append((b, c.rel))
    return lowers, uppers, rest


def eliminate(cs: ConstraintSet, z: str) -> ConstraintSet:
    """Fourier-Motzkin: a conjunction equivalent to ``exists z. cs``."""
    lowers, uppers, rest = _bounds(cs, z)
    if not lowers or not uppers:
        return _tighten(rest)
    upper_set = set(uppers)
    for b, rel in lowers:
        if rel == LE and (b, LE) in upper_set:
            return _tighten(cs.substitute(z, b))
    out = list(rest)
    for (bl, rl), (bu, ru) in itertools.product(lowers, uppers):
        out.append(make(bl - bu, LT if LT in (rl, ru) else LE))
    return _tighten(out)


@lru_cache(maxsize=200_000)
def satisfiable(cs: ConstraintSet) -> bool:
    """Exact real (equivalently rational) feasibility of a conjunction."""
    cur = cs
    while True:
        if cur.trivially_false():
            return False
        names = cur.vars
        if not names:
            return True

        def cost(z):
            lo, up, _ = _bounds(cur, z)
            return len(lo) * len(up) - len(lo) - len(up)

        cur = eliminate(cur, min(sorted(names), key=cost))


def _prune(conjuncts) -> list[ConstraintSet]:
    """Drop infeasible and subsumed conjuncts, deduplicating; order is stable."""
    seen, feasible = set(), []
    for cs in conjuncts:
        if cs in seen:
            continue
        seen.add(cs)
        if satisfiable(cs):
            feasible.append(cs)
    feasible.sort(key=len)
    out: list[ConstraintSet] = []
    for cs in feasible:
        if not any(o.items <= cs.items for o in out):
            out.append(cs)
    return out


def _and(a: list, b: list) -> list[ConstraintSet]:
    return _prune(_tighten(x.items | y.items) for x in a for y in b)


def _cnf_to_dnf(clauses: list, start: list | None = None) -> list[ConstraintSet]:
    acc = start if start is not None else [ConstraintSet()]
    for clause in sorted(clauses, key=len):
        acc = _and(acc, [ConstraintSet([c]) for c in clause])
        if not acc:
            break
    return acc


class _QF:
    """Quantifier-free formula held as DNF (list of conjunctions) or CNF
    (list of clauses, each a list of constraints)."""

    __slots__ = ("kind", "items")

    def __init__(self, kind: str, items: list):
        self.kind = kind
        self.items = items

    def dnf(self) -> list[ConstraintSet]:
        if self.kind == "dnf":
            return self.items
        return _cnf_to_dnf(self.items)


def _negate_dnf(dnf: list) -> _QF:
    return _QF("cnf", [[c.negate() for c in cs] for cs in dnf])


def _negate_cnf(cnf: list) -> _QF:
    return _QF("dnf", _prune(_tighten(c.negate() for c in clause) for clause in cnf))


def _qf(f: FOFormula) -> _QF:
    match f:
        case Atom():
            c = f.constraint()
            return _QF("dnf", _prune([ConstraintSet([c])]))
        case Not(arg=g):
            inner = _qf(g)
            return _negate_dnf(inner.items) if inner.kind == "dnf" else _negate_cnf(inner.items)
        case And(args=args):
            parts = [_qf(g) for g in args]
            dnfs = sorted((p.items for p in parts if p.kind == "dnf"), key=len)
            clauses = [cl for p in parts if p.kind == "cnf" for cl in p.items]
            if not dnfs:
                return _QF("cnf", clauses)
            acc = dnfs[0]
            for d in dnfs[1:]:
                acc = _and(acc, d)
            return _QF("dnf", _cnf_to_dnf(clauses, acc))
        case Or(args=args):
            parts = [_qf(g) for g in args]
            if parts and all(p.kind == "cnf" and len(p.items) == 1 for p in parts):
                return _QF("cnf", [[c for p in parts for c in p.items[0]]])
            return _QF("dnf", _prune(cs for p in parts for cs in p.dnf()))
        case Exists(var=z, body=b):
            return _QF("dnf", _exists(z, _qf(b).dnf()))
        case Forall(var=z, body=b):
            return _qf(Not(Exists(z, Not(b))))
    raise TypeError(f"not a formula: {f!r}")


def _exists(z: str, dnf: list) -> list[ConstraintSet]:
    return _prune(eliminate(cs, z) for cs in dnf)


def _dnf_formula(dnf: list) -> FOFormula:
    return Or(tuple(And(tuple(from_constraint(c) for c in cs)) for cs in dnf))


def qelim(f: FOFormula) -> FOFormula:
    """An equivalent quantifier-free formula, as a disjunction of conjunctions."""
    return _dnf_formula(_qf(f).dnf())


# ------------------------------------------------ bottom-up elimination


def _rename_dnf(dnf: list, mapping: dict) -> list[ConstraintSet]:
    out = []
    for cs in dnf:
        for k, v in mapping.items():
            cs = cs.substitute(k, v)
        out.append(_tighten(cs))
    return _prune(out)


def graph_dnf(t: Term, ctx: Sequence[str], y: str = "_y") -> list[ConstraintSet]:
    """Quantifier-free DNF of ``F_t(ctx, y)``.

    Equivalent to ``qelim(graph_formula(t, ctx, y))`` but eliminates the
    quantifiers node by node, so each body is processed once even though
    a fixed-point formula mentions it twice.
    """
    missing = t.fv - set(ctx)
    if missing:
        raise ValueError(f"free variables {sorted(missing)} not in context")
    fresh = _Fresh()
    rng = {}

    def ranges(names: tuple) -> list[ConstraintSet]:
        if names not in rng:
            rng[names] = [ConstraintSet(c for x in names for c in in_unit(x))]
        return rng[names]

    def leaf(ctx, yv, e):
        return _and(ranges(ctx), [ConstraintSet([make(yv - e, LE), make(e - yv, LE)])])

    def go(u: Term, ctx: tuple, out: str) -> list[ConstraintSet]:
        yv = _v(out)
        match u:
            case Var(name=x):
                return leaf(ctx, yv, _v(x))
            case Zero():
                return leaf(ctx, yv, _0)
            case One():
                return leaf(ctx, yv, _1)
            case Scalar(q=q, body=b):
                z = fresh()
                inner = go(b, ctx, z)
                link = _qf(atom_eq(yv, _v(z).scale(q))).dnf()
                return _exists(z, _and(inner, link))
            case OPlus(left=l, right=r) | ODot(left=l, right=r) | Join(left=l, right=r) | Meet(left=l, right=r):
                z1, z2 = fresh(), fresh()
                d1, d2 = go(l, ctx, z1), go(r, ctx, z2)
                link = _qf(_combine(u, yv, _v(z1), _v(z2))).dnf()
                return _exists(z2, _exists(z1, _and(_and(d1, d2), link)))
            case Mu(var=x, body=b) | Nu(var=x, body=b):
                inner_out = fresh()
                fb = go(b, ctx + (x,), inner_out)
                z = fresh()
                zv = _v(z)
                at_y = _rename_dnf(fb, {x: yv, inner_out: yv})
                at_z = _rename_dnf(fb, {x: zv, inner_out: zv})
                # forall z. F(z,z) -> y <= z  ==  not exists z. F(z,z) & z < y
                beyond = make(zv - yv, LT) if isinstance(u, Mu) else make(yv - zv, LT)
                counter = _exists(z, _and(at_z, [ConstraintSet([beyond])]))
                clauses = [[c.negate() for c in cs] for cs in counter]
                return _cnf_to_dnf(clauses, at_y)
        raise TypeError(f"not a term: {u!r}")

    return go(t, tuple(ctx), y)


# ------------------------------------------------------- value extraction


def _unique_value(dnf: list, y: str) -> Fraction:
    points = set()
    for cs in dnf:
        for c in cs:
            a = c.expr.coeff(y)
            if c.expr.vars - {y}:
                raise InvariantViolation(f"constraint {c} mentions more than {y}")
            if a != 0:
                points.add(-c.expr.const / a)
    ordered = sorted(points)
    candidates = [(v, True) for v in ordered]
    if ordered:
        candidates += [((a + b) / 2, False) for a, b in zip(ordered, ordered[1:])]
        candidates += [(ordered[0] - 1, False), (ordered[-1] + 1, False)]
    else:
        candidates.append((Fraction(0), False))
    sat = [(v, is_pt) for v, is_pt in candidates if any(cs.holds({y: v}) for cs in dnf)]
    if len(sat) != 1 or not sat[0][1]:
        raise InvariantViolation(f"graph formula does not pin down a unique value: {sat}")
    return sat[0][0]


def value_via_qe(t: Term, ctx: Sequence[str] = (), p: Point | None = None) -> Fraction:
    """Value of ``t`` at ``p`` read off the eliminated graph formula.

    For a closed term call with no context.  Otherwise the input point is
    substituted first and the quantifiers of ``F_t(p, y)`` are eliminated.
    """
    p = p or {}
    missing = t.fv - set(ctx)
    if missing:
        raise ValueError(f"free variables {sorted(missing)} not in context")
    y = "_y"
    point = {x: Fraction(p[x]) for x in ctx}
    for x, v in point.items():
        if not 0 <= v <= 1:
            raise ValueError(f"value {v} for {x!r} outside [0,1]")
    dnf = graph_dnf(t, tuple(ctx), y)
    if point:
        dnf = _rename_dnf(dnf, {x: LinExpr.constant(v) for x, v in point.items()})
    return _unique_value(dnf, y)


def representing_system(t: Term, ctx: Sequence[str]) -> list[CLE]:
    """A finite system of CLEs over ``ctx`` that represents ``t``."""
    y = "_y"
    if y in ctx:
        raise ValueError("context may not use the reserved name _y")
    out: dict = {}
    for K in graph_dnf(t, tuple(ctx), y):
        strict_lo, lo, hi, strict_hi, C = [], [], [], [], []
        for c in K:
            a = c.expr.coeff(y)
            if a == 0:
                C.append(c)
                continue
            b = c.expr.drop(y).scale(-1 / a)
            if a < 0:
                (strict_lo if c.rel == LT else lo).append(b)
            else:
                (strict_hi if c.rel == LT else hi).append(b)
        for bj in lo:
            cond = list(C)
            cond += [make(a - bj, LT) for a in strict_lo]
            cond += [make(b - bj, LE) for b in lo]
            cond += [make(bj - c, LE) for c in hi]
            cond += [make(bj - d, LT) for d in strict_hi]
            cs = _tighten(cond)
            if satisfiable(cs):
                out.setdefault(CLE(cs, bj), None)
    return list(out)
