import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compactness.logic import solve_formulas
from compactness.matching import (
    MarketError, MarriageMarket, check_manipulation, encode_flawed_alternative, encode_man_optimal,
    encode_stability, enumerate_stable, gale_shapley, is_stable, man_optimal_context, man_optimal_formulas,
    man_optimal_via_sat, ordered_sublists, partner_of, stable_models,
)

from oracles import stable_matchings

UNIQUE = MarriageMarket({"m1": ["w1", "w2"], "m2": ["w1", "w2"]}, {"w1": ["m2", "m1"], "w2": ["m1", "m2"]})
TWO = MarriageMarket({"m1": ["w1", "w2"], "m2": ["w2", "w1"]}, {"w1": ["m2", "m1"], "w2": ["m1", "m2"]})
EMPTY = MarriageMarket({}, {})


def random_market(rng, nm, nw, p_accept=0.8):
    men = [f"m{i}" for i in range(nm)]
    women = [f"w{j}" for j in range(nw)]
    mp = {m: rng.sample(women, sum(rng.random() < p_accept for _ in women)) for m in men}
    wp = {w: rng.sample(men, sum(rng.random() < p_accept for _ in men)) for w in women}
    return MarriageMarket(mp, wp)


@st.composite
def markets(draw, max_side=4):
    rng = random.Random(draw(st.integers(0, 10**9)))
    return random_market(rng, draw(st.integers(0, max_side)), draw(st.integers(0, max_side)), draw(st.floats(0.3, 1)))


def test_singleton_market_unique_model_is_matched():
    mkt = MarriageMarket({"m": ["w"]}, {"w": ["m"]})
    assert stable_models(mkt) == [frozenset({("m", "w")})]


def test_unique_stable_market():
    assert stable_models(UNIQUE) == [frozenset({("m1", "w2"), ("m2", "w1")})]
    assert enumerate_stable(UNIQUE) == {frozenset({("m1", "w2"), ("m2", "w1")})}


def test_two_stable_market():
    expected = {frozenset({("m1", "w1"), ("m2", "w2")}), frozenset({("m1", "w2"), ("m2", "w1")})}
    assert set(stable_models(TWO)) == expected
    assert enumerate_stable(TWO) == expected


def test_flawed_alternative_admits_all_false_model():
    fs = encode_flawed_alternative(TWO)
    from oracles import eval_formula

    all_false = {("matched", m, w): False for m in TWO.men for w in TWO.women}
    assert all(eval_formula(f, all_false) for f in fs)
    assert len(stable_models(TWO, fs)) > len(enumerate_stable(TWO))


def test_flawed_alternative_on_empty_market_is_vacuous():
    assert encode_flawed_alternative(EMPTY) == []


def test_gale_shapley_both_sides():
    assert gale_shapley(TWO, "men") == frozenset({("m1", "w1"), ("m2", "w2")})
    assert gale_shapley(TWO, "women") == frozenset({("m1", "w2"), ("m2", "w1")})


def test_gale_shapley_empty_lists():
    mkt = MarriageMarket({"m1": [], "m2": []}, {"w1": []})
    assert gale_shapley(mkt) == frozenset()


def test_is_stable_rejects_ill_formed_matching():
    with pytest.raises(MarketError):
        is_stable(TWO, {("m1", "w1"), ("m2", "w1")})


def test_empty_matching_blocked_in_singleton_market():
    mkt = MarriageMarket({"m": ["w"]}, {"w": ["m"]})
    assert is_stable(mkt, set()) == (False, [("blocking", "m", "w")])


def test_empty_market_has_the_empty_matching():
    assert enumerate_stable(EMPTY) == {frozenset()}
    assert stable_models(EMPTY) == [frozenset()]


def test_man_optimal_encoding_on_two_stable_market():
    ms = stable_models(TWO, encode_man_optimal(TWO, man_optimal_context(TWO)))
    assert ms == [gale_shapley(TWO, "men")]


def test_man_optimal_redundant_on_unique_market():
    ms = stable_models(UNIQUE, encode_man_optimal(UNIQUE, man_optimal_context(UNIQUE)))
    assert ms == stable_models(UNIQUE)


def test_always_unmatched_man_contributes_no_formula():
    mkt = MarriageMarket({"m1": ["w"], "m2": ["w"]}, {"w": ["m1", "m2"]})
    ctx = man_optimal_context(mkt)
    assert "m2" not in ctx.matched_men
    assert len(man_optimal_formulas(mkt, ctx)) == 1


def test_truth_is_not_a_manipulation():
    r = check_manipulation(TWO, "m1", TWO.men_prefs["m1"])
    assert r.truthful_partner == r.manipulated_partner and not r.improves


def test_truncation_to_manipulated_partner_is_not_better():
    # w2 is what m1 gets under the lie (w2, w1); truncating to [w2] cannot beat truth
    lie = check_manipulation(TWO, "m1", ["w2", "w1"])
    trunc = check_manipulation(TWO, "m1", [lie.manipulated_partner])
    assert not TWO.prefers("m1", trunc.manipulated_partner, lie.truthful_partner)
    assert lie.reduction_sat is True


def test_ordered_sublists_count():
    # sum over r of P(3, r) = 1 + 3 + 6 + 6
    assert len(ordered_sublists(["a", "b", "c"])) == 16


@settings(max_examples=60, deadline=None)
@given(markets())
def test_sat_models_equal_bruteforce_stable_set(mkt):
    expected = stable_matchings(dict(mkt.men_prefs), dict(mkt.women_prefs))
    assert set(stable_models(mkt)) == expected
    assert enumerate_stable(mkt) == expected


@settings(max_examples=60, deadline=None)
@given(markets())
def test_gale_shapley_is_stable_and_man_optimal(mkt):
    mu = gale_shapley(mkt, "men")
    assert is_stable(mkt, mu) == (True, [])
    for nu in stable_matchings(dict(mkt.men_prefs), dict(mkt.women_prefs)):
        for m in mkt.men:
            a, b = partner_of(mu, m), partner_of(nu, m)
            assert a == b or mkt.prefers(m, a, b)
    assert man_optimal_via_sat(mkt) == mu


@settings(max_examples=30, deadline=None)
@given(markets(max_side=3))
def test_no_profitable_misreport(mkt):
    for m in mkt.men:
        for lie in ordered_sublists(mkt.women):
            assert not check_manipulation(mkt, m, lie).improves
