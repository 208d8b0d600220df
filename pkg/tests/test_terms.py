from fractions import Fraction

import pytest
from hypothesis import given, settings

from generators import terms
from lmu.errors import ParseError
from lmu.terms import (
    Join,
    Meet,
    Mu,
    Nu,
    ODot,
    OPlus,
    One,
    Scalar,
    Var,
    Zero,
    const,
    fixpoint_count,
    free_vars,
    negate,
    parse_term,
    rename_bound,
    threshold,
    to_text,
    tokenize,
)

NESTED = "nu x. mu y. (5/8 (+) 3/8 * x) (.) (1/2 \\/ (3/8 (+) 1/2 * y))"


def test_parse_simple_binder():
    assert parse_term("mu x. x") == Mu("x", Var("x"))


def test_parse_scalar_of_sum():
    assert parse_term("1/2 * (x (+) y)") == Scalar(Fraction(1, 2), OPlus(Var("x"), Var("y")))


def test_parse_threshold_macro_expands():
    t = parse_term("mu x. (P>=1/2 x \\/ 1/2)")
    inner = threshold(">=", Fraction(1, 2), Var("x"))
    assert t == Mu("x", Join(inner, const(Fraction(1, 2))))


def test_bare_integers_are_constants():
    assert parse_term("0 \\/ 1") == Join(Zero(), One())
    assert parse_term("3/4") == const(Fraction(3, 4))


def test_precedence_levels():
    t = parse_term("a \\/ b /\\ c")
    assert t == Join(Var("a"), Meet(Var("b"), Var("c")))
    t = parse_term("a (.) b (+) c")
    assert t == OPlus(ODot(Var("a"), Var("b")), Var("c"))


def test_binder_extends_right():
    assert parse_term("mu x. x \\/ 0") == Mu("x", Join(Var("x"), Zero()))


def test_same_operator_chains_left():
    assert parse_term("a (+) b (+) c") == OPlus(OPlus(Var("a"), Var("b")), Var("c"))


@pytest.mark.parametrize("text", ["a \\/ b (+) c", "a /\\ b (.) c", "x (+) y \\/ z"])
def test_mixing_same_level_rejected(text):
    with pytest.raises(ParseError, match="parentheses"):
        parse_term(text)


def test_scalar_out_of_range_rejected():
    with pytest.raises(ParseError, match="outside"):
        parse_term("3/2 * x")


def test_parse_error_position():
    with pytest.raises(ParseError) as info:
        parse_term("mu x.\n  x $ 1")
    assert (info.value.line, info.value.column) == (2, 5)


@pytest.mark.parametrize("text", ["", "mu . x", "(x", "x y", "P>3/2 x", "P=1/2 x", "1/0"])
def test_malformed_inputs(text):
    with pytest.raises(ParseError):
        parse_term(text)


def test_comments_ignored():
    assert parse_term("x # trailing\n") == Var("x")


def test_free_vars():
    assert free_vars(Mu("x", Var("x"))) == frozenset()
    assert free_vars(OPlus(Var("x"), Mu("y", Var("y")))) == {"x"}
    assert free_vars(parse_term(NESTED)) == frozenset()


def test_negate_examples():
    assert negate(Mu("x", Var("x"))) == Nu("x", Var("x"))
    q = Fraction(1, 4)
    assert negate(Scalar(q, One())) == OPlus(Scalar(q, Zero()), const(Fraction(3, 4)))
    assert negate(Join(Var("x"), ODot(Zero(), Var("y")))) == Meet(Var("x"), OPlus(One(), Var("y")))


def test_threshold_shapes():
    t = Var("x")
    assert threshold(">0", None, t) == Mu("y", OPlus(Var("y"), t))
    assert threshold("=1", None, t) == Nu("y", ODot(Var("y"), t))
    r = Fraction(1, 3)
    assert threshold(">", r, t) == Mu("y", OPlus(Var("y"), ODot(t, const(Fraction(2, 3)))))
    assert threshold(">=", r, t) == Nu("y", ODot(Var("y"), OPlus(t, const(Fraction(2, 3)))))


def test_threshold_variable_is_fresh():
    t = OPlus(Var("y"), Var("y_1"))
    out = threshold(">0", None, t)
    assert out.var not in ("y", "y_1") and out.fv == {"y", "y_1"}


@pytest.mark.parametrize("r", [0, 1, Fraction(3, 2)])
def test_threshold_rejects_bad_r(r):
    with pytest.raises(ValueError):
        threshold(">=", r, Var("x"))


def test_rename_bound_example():
    t = Mu("x", OPlus(Var("x"), Mu("x", Var("x"))))
    assert rename_bound(t) == Mu("x", OPlus(Var("x"), Mu("x_1", Var("x_1"))))


def test_rename_bound_avoids_free_names():
    t = OPlus(Var("x"), Mu("x", Var("x")))
    out = rename_bound(t)
    assert out.right.var != "x" and out.fv == {"x"}


def test_rename_bound_leaves_distinct_terms():
    t = parse_term(NESTED)
    assert rename_bound(t) == t


def test_tokenizer_tracks_columns():
    toks = tokenize("mu  x")
    assert [(t.text, t.col) for t in toks[:2]] == [("mu", 1), ("x", 5)]


@settings(max_examples=200, deadline=None)
@given(terms(depth=4, free=("x", "y")))
def test_print_parse_round_trip(t):
    t = rename_bound(t)
    assert parse_term(to_text(t)) == t


@settings(max_examples=100, deadline=None)
@given(terms(depth=4, free=("x",)))
def test_rename_bound_idempotent_and_distinct(t):
    once = rename_bound(t)
    assert rename_bound(once) == once
    binders = []
    stack = [once]
    while stack:
        u = stack.pop()
        if isinstance(u, (Mu, Nu)):
            binders.append(u.var)
        stack.extend(v for v in (getattr(u, "left", None), getattr(u, "right", None), getattr(u, "body", None)) if v)
    assert len(binders) == len(set(binders)) == fixpoint_count(once)
    assert not set(binders) & once.fv


@settings(max_examples=100, deadline=None)
@given(terms(depth=4, free=("x", "y")))
def test_negate_preserves_free_variables(t):
    assert negate(t).fv == t.fv
