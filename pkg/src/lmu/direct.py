"""Direct evaluation of mu-terms by iterating through linear pieces.

:func:`evaluate` returns, for a term and a rational input point, one
conditioned linear expression ``C |- e`` such that ``C`` holds at the point
and, wherever ``C`` holds, the inputs lie in the unit cube and ``e`` equals
the term.  Fixed points are found by :func:`lfp_piece` / :func:`gfp_piece`,
which only need a *piece oracle* for the body and are therefore usable on
hand-written piecewise functions as well.
"""

from __future__ import annotations

import sys
from fractions import Fraction
from typing import Callable, Sequence

from lmu.errors import InvariantViolation
from lmu.linear import (
    CLE,
    ConstraintSet,
    Degenerate,
    LinExpr,
    Point,
    eq,
    in_unit,
    le,
    lt,
    solve_self,
)
from lmu.terms import Join, Meet, Mu, Nu, ODot, OPlus, One, Scalar, Term, Var, Zero

PieceOracle = Callable[[Point], CLE]

DEFAULT_MAX_ITER = 10**6
_ZERO = LinExpr.constant(0)
_ONE = LinExpr.constant(1)


def _fixpoint(
    oracle: PieceOracle,
    target: str,
    p: Point,
    greatest: bool,
    max_iter: int,
    trace: list | None,
) -> CLE:
    D = ConstraintSet()
    d = _ONE if greatest else _ZERO
    for _ in range(max_iter):
        dp = d.evaluate(p)
        at_d = {**p, target: dp}
        piece = oracle(at_d)
        C, e = piece.cond, piece.expr
        if not C.holds(at_d):
            raise InvariantViolation(f"piece {piece} does not apply at {target}={dp}")
        if trace is not None:
            trace.append((dp, piece))
        C_d = C.substitute(target, d)

        sol = solve_self(e, target)
        if isinstance(sol, Degenerate):
            rest = sol.rest
            rp = rest.evaluate(p)
            if rp == 0:
                return CLE(D | C_d | eq(rest, _ZERO), d)
            N = lt(rest, _ZERO) if rp < 0 else lt(_ZERO, rest)
        else:
            f = sol.f
            at_f = {**p, target: f.evaluate(p)}
            violated = next((c for c in C if not c.holds(at_f)), None)
            if violated is None:
                return CLE(D | C_d | C.substitute(target, f), f)
            N = violated.substitute(target, f).negate()

        # Bounds on the target: a*x + g rel 0 gives x rel -g/a (upper when a > 0).
        bounds = []
        for c in C:
            a = c.expr.coeff(target)
            if (a < 0) if greatest else (a > 0):
                bounds.append(c.expr.drop(target).scale(-1 / a))
        if not bounds:
            raise InvariantViolation(f"piece {piece} leaves {target} unbounded")
        values = [b.evaluate(p) for b in bounds]
        best = max(values) if greatest else min(values)
        b_j = bounds[values.index(best)]
        if greatest:
            extra = [le(b, b_j) for b in bounds]
        else:
            extra = [le(b_j, b) for b in bounds]

        D = D | C_d | ConstraintSet([N, *extra])
        new_d = e.substitute(target, b_j)
        new_dp = new_d.evaluate(p)
        if (new_dp >= dp) if greatest else (new_dp <= dp):
            raise InvariantViolation(f"no progress at {target}: {dp} -> {new_dp}")
        if C.holds({**p, target: new_dp}):
            raise InvariantViolation(f"piece {piece} still applies after {target} := {new_dp}")
        if not D.holds(p):
            raise InvariantViolation("propagated constraints fail at the query point")
        d = new_d
    raise InvariantViolation(f"fixed-point loop for {target} exceeded {max_iter} iterations")


def lfp_piece(
    oracle: PieceOracle,
    ctx: Sequence[str],
    target: str,
    p: Point,
    *,
    max_iter: int = DEFAULT_MAX_ITER,
    trace: list | None = None,
) -> CLE:
    """Least fixed point of ``target |-> body`` at ``p`` as a CLE over ``ctx``.

    ``oracle(point)`` must return a piece of the body valid at ``point``
    (which binds ``ctx`` and ``target``).  If ``trace`` is a list, one
    ``(approximation, piece)`` pair is appended per oracle call.
    """
    return _fixpoint(oracle, target, _restrict(p, ctx), False, max_iter, trace)


def gfp_piece(
    oracle: PieceOracle,
    ctx: Sequence[str],
    target: str,
    p: Point,
    *,
    max_iter: int = DEFAULT_MAX_ITER,
    trace: list | None = None,
) -> CLE:
    """Greatest fixed point; the dual of :func:`lfp_piece`, iterating down from 1."""
    return _fixpoint(oracle, target, _restrict(p, ctx), True, max_iter, trace)


def _restrict(p: Point, ctx: Sequence[str]) -> dict:
    return {x: Fraction(p[x]) for x in ctx}


def intern(t: Term, table: dict | None = None) -> Term:
    """Rebuild ``t`` so that structurally equal subterms are the same object."""
    table = {} if table is None else table

    def go(u: Term) -> Term:
        match u:
            case Var(name=n):
                key = (Var, n)
            case Zero() | One():
                key = (type(u),)
            case Scalar(q=q, body=b):
                b = go(b)
                key = (Scalar, q, id(b))
                if key not in table:
                    table[key] = Scalar(q, b)
                return table[key]
            case Join(left=l, right=r) | Meet(left=l, right=r) | OPlus(left=l, right=r) | ODot(left=l, right=r):
                l, r = go(l), go(r)
                key = (type(u), id(l), id(r))
                if key not in table:
                    table[key] = type(u)(l, r)
                return table[key]
            case Mu(var=x, body=b) | Nu(var=x, body=b):
                b = go(b)
                key = (type(u), x, id(b))
                if key not in table:
                    table[key] = type(u)(x, b)
                return table[key]
            case _:
                raise TypeError(f"not a term: {u!r}")
        return table.setdefault(key, u)

    return go(t)


class _Evaluator:
    """One evaluation.  Results are cached per (subterm, values of its free
    variables); a piece only mentions the subterm's free variables, so the
    cache is exact.  Terms are interned first so equal subterms share entries."""

    def __init__(self, max_iter: int):
        self.max_iter = max_iter
        self.cache: dict = {}

    def run(self, t: Term, p: Point) -> CLE:
        key = (id(t), tuple(sorted((x, p[x]) for x in t.fv)))
        hit = self.cache.get(key)
        if hit is None:
            hit = self.cache[key] = self._run(t, p)
        return hit

    def _run(self, t: Term, p: Point) -> CLE:
        match t:
            case Var(name=x):
                return CLE(ConstraintSet(in_unit(x)), LinExpr.var(x))
            case Zero():
                return CLE(ConstraintSet(), _ZERO)
            case One():
                return CLE(ConstraintSet(), _ONE)
            case Scalar(q=q, body=b):
                c = self.run(b, p)
                return CLE(c.cond, c.expr.scale(q))
            case OPlus(left=l, right=r):
                c1, c2 = self.run(l, p), self.run(r, p)
                s = c1.expr + c2.expr
                if s.evaluate(p) <= 1:
                    return CLE(c1.cond | c2.cond | [le(s, _ONE)], s)
                return CLE(c1.cond | c2.cond | [le(_ONE, s)], _ONE)
            case ODot(left=l, right=r):
                c1, c2 = self.run(l, p), self.run(r, p)
                s = c1.expr + c2.expr
                if s.evaluate(p) >= 1:
                    return CLE(c1.cond | c2.cond | [le(_ONE, s)], s - _ONE)
                return CLE(c1.cond | c2.cond | [le(s, _ONE)], _ZERO)
            case Join(left=l, right=r):
                c1, c2 = self.run(l, p), self.run(r, p)
                if c1.expr.evaluate(p) >= c2.expr.evaluate(p):
                    return CLE(c1.cond | c2.cond | [le(c2.expr, c1.expr)], c1.expr)
                return CLE(c1.cond | c2.cond | [le(c1.expr, c2.expr)], c2.expr)
            case Meet(left=l, right=r):
                c1, c2 = self.run(l, p), self.run(r, p)
                if c1.expr.evaluate(p) <= c2.expr.evaluate(p):
                    return CLE(c1.cond | c2.cond | [le(c1.expr, c2.expr)], c1.expr)
                return CLE(c1.cond | c2.cond | [le(c2.expr, c1.expr)], c2.expr)
            case Mu(var=x, body=b) | Nu(var=x, body=b):
                outer = {k: p[k] for k in t.fv}
                return _fixpoint(
                    lambda q: self.run(b, q), x, outer, isinstance(t, Nu), self.max_iter, None
                )
        raise TypeError(f"not a term: {t!r}")


def _check_point(t: Term, ctx: Sequence[str], p: Point) -> dict:
    missing = t.fv - set(ctx)
    if missing:
        raise ValueError(f"free variables {sorted(missing)} not in context")
    if len(set(ctx)) != len(ctx):
        raise ValueError("context has duplicate variables")
    point = {}
    for x in ctx:
        if x not in p:
            raise ValueError(f"no value given for {x!r}")
        v = Fraction(p[x])
        if not 0 <= v <= 1:
            raise ValueError(f"value {v} for {x!r} outside [0,1]")
        point[x] = v
    return point


def evaluate(
    t: Term, ctx: Sequence[str], p: Point, *, max_iter: int = DEFAULT_MAX_ITER
) -> CLE:
    """A piece of ``t`` (as a function of ``ctx``) that applies at ``p``."""
    point = _check_point(t, ctx, p)
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 20000))
    try:
        piece = _Evaluator(max_iter).run(intern(t), point)
    finally:
        sys.setrecursionlimit(limit)
    cond = piece.cond | [c for x in ctx for c in in_unit(x)]
    if not cond.holds(point):
        raise InvariantViolation(f"returned piece {piece} does not apply at {point}")
    return CLE(cond, piece.expr)


def value(t: Term, **kwargs) -> Fraction:
    """Exact value of a closed term."""
    if t.fv:
        raise ValueError(f"term is not closed: free variables {sorted(t.fv)}")
    piece = evaluate(t, (), {}, **kwargs)
    if not piece.expr.is_constant():
        raise InvariantViolation(f"closed term produced non-constant piece {piece}")
    return piece.expr.const
