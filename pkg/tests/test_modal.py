import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import random_modal, random_modal_ff, random_pnts
from lmu.errors import ParseError
from lmu.modal import (
    Box,
    CoProp,
    Diamond,
    Prop,
    direct_semantics,
    domination,
    fixpoints,
    model_check,
    negate_modal,
    parse_modal,
    reduce,
    reset,
    to_text,
)
from lmu.pnts import PNTS, Interpretation, leadsto
from lmu.terms import Meet, Mu, Nu, One, Var, subterms, threshold

FORK = PNTS.build(["s0", "s1", "s2"], {"s0": [{"s1": F(1, 2), "s2": F(1, 2)}]})
P_AT_S1 = Interpretation({"p": {"s1": F(1)}})


def test_parse_examples():
    assert parse_modal("<> @p") == Diamond(Prop("p"))
    assert parse_modal("~@p") == CoProp("p")
    assert parse_modal("[] 1 /\\ <> 1") == Meet(Box(One()), Diamond(One()))
    assert parse_modal("nu X. X") == Nu("X", Var("X"))


@pytest.mark.parametrize("text", ["<>", "@", "@p \\/ @q (+) @r", "~p"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_modal(text)


def test_print_round_trip():
    rng = random.Random(2)
    for _ in range(100):
        f = parse_modal(to_text(random_modal(rng)))
        assert parse_modal(to_text(f)) == f


def test_top_is_one_everywhere():
    f = parse_modal("nu X. X")
    for s in FORK.states:
        assert model_check(f, FORK, P_AT_S1, s) == 1


def test_negate_examples():
    assert negate_modal(Diamond(Prop("p"))) == Box(CoProp("p"))
    assert negate_modal(Nu("X", Var("X"))) == Mu("X", Var("X"))
    with pytest.raises(ValueError):
        negate_modal(Diamond(Var("X")))


def test_diamond_expectation():
    f = parse_modal("<> @p")
    assert model_check(f, FORK, P_AT_S1, "s0") == F(1, 2)
    assert direct_semantics(f, FORK, P_AT_S1)["s0"] == F(1, 2)


def test_deadlock_conventions():
    m = PNTS.build(["d"], {})
    rho = Interpretation({"p": {"d": F(1)}})
    for backend in ("direct", "qe"):
        assert model_check(parse_modal("<> @p"), m, rho, "d", backend) == 0
        assert model_check(parse_modal("[] ~@p"), m, rho, "d", backend) == 1
    assert direct_semantics(parse_modal("<> 1"), m, rho) == {"d": 0}
    assert direct_semantics(parse_modal("[] 0"), m, rho) == {"d": 1}


def test_domination():
    f = parse_modal("mu X. nu Y. X \\/ Y \\/ (mu Z. Z)")
    assert domination(f) == {("X", "Y"), ("X", "Z"), ("Y", "Z")}
    info = fixpoints(f)
    # leftmost-innermost numbering: Z, then Y, then X
    assert [b.var for b in info.binders] == ["Z", "Y", "X"]


def test_reset_drops_dominated_entries():
    f = parse_modal("mu X. nu Y. X \\/ Y")
    info = fixpoints(f)
    y, x = info.index["Y"], info.index["X"]
    gamma = frozenset({(y, "s0"), (y, "s1"), (x, "s1")})
    assert reset(gamma, x, "s0", info) == {(x, "s0"), (x, "s1")}
    assert reset(gamma, y, "s2", info) == gamma | {(y, "s2")}


def test_reset_rebinds_subordinate_variable():
    m = PNTS.build(["a", "b"], {"a": [{"b": 1}], "b": [{"a": 1}]})
    f = parse_modal("mu X. nu Y. <> X \\/ <> Y")
    t = reduce(f, m, Interpretation(), "a")
    binders = [u.var for u in subterms(t) if isinstance(u, (Mu, Nu))]
    # each re-entry of X clears the Y entries, so Y at "b" gets bound again
    assert binders.count("x1_b") >= 2
    assert not t.fv


def test_reduce_is_closed_and_small_variable_set():
    rng = random.Random(4)
    for _ in range(30):
        m, rho = random_pnts(rng, 4, 2, boolean=False)
        f = random_modal(rng)
        for s in m.states:
            t = reduce(f, m, rho, s)
            assert not t.fv
            names = {u.var for u in subterms(t) if isinstance(u, (Mu, Nu))}
            assert len(names) <= len(fixpoints(f).binders) * len(m.states)


def test_positive_threshold_of_diamond():
    rng = random.Random(9)
    for _ in range(40):
        m, rho = random_pnts(rng, 4, 2, boolean=False, props="x")
        f = threshold(">0", None, Diamond(Prop("x")))
        edges = leadsto(m)
        for s in m.states:
            expected = any(rho("x", t) > 0 for (u, t) in edges if u == s)
            assert model_check(f, m, rho, s) == (1 if expected else 0)


def test_oplus_sums_stay_below_one():
    rng = random.Random(5)
    for _ in range(30):
        m, rho = random_pnts(rng, 5, 2, boolean=False)
        vals = direct_semantics(random_modal_ff(rng), m, rho)
        for s in m.states:
            for d in m.choices(s):
                partial = F(0)
                for t, w in d.weights:
                    partial += w * vals[t]
                    assert partial <= 1


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32))
def test_model_check_matches_direct_semantics(seed):
    rng = random.Random(seed)
    m, rho = random_pnts(rng, 5, 2, boolean=False)
    f = random_modal_ff(rng)
    sem = direct_semantics(f, m, rho)
    for s in m.states:
        assert model_check(f, m, rho, s) == sem[s]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32))
def test_negation_complements(seed):
    rng = random.Random(seed)
    m, rho = random_pnts(rng, 4, 2, boolean=False)
    f = random_modal_ff(rng)
    sem, neg = direct_semantics(f, m, rho), direct_semantics(negate_modal(f), m, rho)
    assert all(neg[s] == 1 - sem[s] for s in m.states)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32))
def test_backends_agree_with_fixed_points(seed):
    rng = random.Random(seed)
    m, rho = random_pnts(rng, 3, 2, boolean=False)
    f = random_modal(rng, depth=3, max_fp=2)
    for s in m.states:
        assert model_check(f, m, rho, s, "direct") == model_check(f, m, rho, s, "qe")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32))
def test_negation_complements_with_fixed_points(seed):
    rng = random.Random(seed)
    m, rho = random_pnts(rng, 3, 2, boolean=False)
    f = random_modal(rng, depth=3, max_fp=2)
    g = negate_modal(f)
    for s in m.states:
        assert model_check(g, m, rho, s) == 1 - model_check(f, m, rho, s)
