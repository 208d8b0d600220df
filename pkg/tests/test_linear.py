from fractions import Fraction as F

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from generators import rationals01
from lmu.linear import (
    CLE,
    LE,
    LT,
    ConstraintSet,
    Degenerate,
    LinExpr,
    Unique,
    eq,
    eval_expr,
    holds,
    le,
    lt,
    make,
    solve_self,
    substitute,
)

X, Y = LinExpr.var("x"), LinExpr.var("y")


def c(q):
    return LinExpr.constant(q)


def test_eval_examples():
    assert eval_expr(X + c(F(1, 4)), {"x": F(0)}) == F(1, 4)
    assert eval_expr(X.scale(F(1, 2)) + c(F(1, 4)), {"x": F(1, 2)}) == F(1, 2)
    assert eval_expr(X.scale(F(1, 4)) + c(F(19, 32)), {"x": F(19, 24)}) == F(19, 24)


def test_eval_missing_variable():
    with pytest.raises(KeyError):
        eval_expr(X + Y, {"x": F(0)})


def test_substitute_examples():
    assert substitute(X + Y, "x", Y.scale(2)) == Y.scale(3)
    e = Y + c(1)
    assert substitute(e, "x", e) == e


def test_zero_coefficients_dropped():
    assert (X - X).coeffs == () and (X - X).is_constant()


def test_holds_examples():
    cs = ConstraintSet([lt(X, c(F(1, 2)))])
    assert holds(cs, {"x": F(0)})
    assert not holds(cs, {"x": F(1, 2)})
    assert holds(ConstraintSet(), {})


def test_solve_self_examples():
    assert solve_self(X.scale(F(1, 2)) + c(F(1, 4)), "x") == Unique(c(F(1, 2)))
    assert solve_self(X + c(F(1, 8)), "x") == Degenerate(c(F(1, 8)))
    assert solve_self(X.scale(F(1, 4)) + c(F(19, 32)), "x") == Unique(c(F(19, 24)))


def test_canonical_form_deduplicates():
    a = make((X - Y).scale(3) + c(1), LE)
    b = make((X - Y).scale(F(1, 2)) + c(F(1, 6)), LE)
    assert a == b
    assert len(ConstraintSet([a, b])) == 1
    assert make(c(5), LT) == make(c(F(1, 9)), LT)


def test_ground_constraints():
    assert len(ConstraintSet([make(c(-2), LE)])) == 0
    bad = ConstraintSet([make(c(0), LT)])
    assert bad.trivially_false() and not bad.holds({})


def test_strict_constraint_absorbs_weak_twin():
    cs = ConstraintSet([lt(X, c(F(1, 2))), le(X, c(F(1, 2)))])
    assert list(cs) == [lt(X, c(F(1, 2)))]
    assert len(ConstraintSet([le(X, c(1))]) | [lt(X, c(1))]) == 1


def test_equality_as_two_inequalities():
    cs = ConstraintSet(eq(X, Y))
    assert cs.holds({"x": F(1, 3), "y": F(1, 3)})
    assert not cs.holds({"x": F(1, 3), "y": F(1, 2)})


def test_printing():
    cle = CLE(ConstraintSet([le(X.scale(2), c(1))]), X + c(F(1, 4)))
    assert str(cle) == "x - 1/2 <= 0 |- x + 1/4"
    assert str(CLE(ConstraintSet(), c(1))) == "|- 1"


def lin_exprs(names=("x", "y")):
    coeff = st.integers(-4, 4).map(F) | st.builds(F, st.integers(-6, 6), st.integers(1, 5))
    return st.builds(lambda cs, k: LinExpr.of(dict(zip(names, cs)), k), st.tuples(*[coeff] * len(names)), coeff)


points = st.fixed_dictionaries({"x": rationals01, "y": rationals01})


@settings(max_examples=300)
@given(lin_exprs(), st.sampled_from([LT, LE]), st.integers(1, 7), points)
def test_canonicalisation_preserves_solutions_and_is_idempotent(e, rel, k, p):
    a = make(e, rel)
    assert make(a.expr, a.rel) == a
    assert make(e.scale(k), rel) == a
    v = e.evaluate(p)
    assert a.holds(p) == (v < 0 if rel == LT else v <= 0)


@settings(max_examples=200)
@given(lin_exprs(), lin_exprs(), points)
def test_substitution_commutes_with_evaluation(e, e2, p):
    lhs = substitute(e, "x", e2).evaluate(p)
    rhs = e.evaluate({**p, "x": e2.evaluate(p)})
    assert lhs == rhs


@settings(max_examples=200)
@given(st.lists(st.tuples(lin_exprs(), st.sampled_from([LT, LE])), max_size=4), points, points, rationals01)
def test_constraint_sets_are_convex(cons, p, q, lam):
    cs = ConstraintSet(make(e, r) for e, r in cons)
    assume(cs.holds(p) and cs.holds(q))
    mid = {k: lam * p[k] + (1 - lam) * q[k] for k in p}
    assert cs.holds(mid)


@settings(max_examples=200)
@given(lin_exprs(("x", "y")), points)
def test_solve_self_gives_fixed_point(e, p):
    sol = solve_self(e, "x")
    if isinstance(sol, Unique):
        f = sol.f.evaluate(p)
        assert e.evaluate({**p, "x": f}) == f
    else:
        assert e.coeff("x") == 1 and sol.rest == e.drop("x")
