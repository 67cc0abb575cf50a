import random
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compactness.dynamic_matching import (
    Chronology, DynamicMarket, FinitePresenceError, Man, check_finite_presence, encode_dynamic_window,
    is_stable_subject_to_tenure, no_finite_presence, parity_line, partners_at, pereyra_forward, window_chronologies,
)
from compactness.matching import MarriageMarket, gale_shapley

from oracles import stable_matchings


def line(ch, lo, hi):
    return [ch.assign[("w", t)] for t in range(lo, hi + 1)]


def random_dynamic(rng, n_men=4, n_women=2, horizon=4):
    women = [f"w{j}" for j in range(n_women)]
    men = []
    for i in range(n_men):
        a = rng.randint(0, horizon - 1)
        d = rng.randint(a + 1, horizon)
        men.append(Man(f"m{i}", tuple(rng.sample(women, rng.randint(0, n_women))), a, d))
    wp = {w: rng.sample([m.name for m in men], rng.randint(0, n_men)) for w in women}
    return DynamicMarket(men, wp), horizon - 1


def test_parity_line_two_chronologies():
    chs = window_chronologies(parity_line(), (-3, 3))
    assert len(chs) == 2
    got = sorted(line(c, -3, 3) for c in chs)
    assert got == [
        ["m-3", "m-3", "m-1", "m-1", "m1", "m1", "m3"],
        ["m-4", "m-2", "m-2", "m0", "m0", "m2", "m2"],
    ]
    # the woman is matched to even arrivals in one and odd in the other
    for c in chs:
        parities = {int(c.assign[("w", t)][1:]) % 2 for t in range(-3, 4)}
        assert len(parities) == 1


@pytest.mark.parametrize("window", [(0, 3), (-2, 2), (5, 10)])
def test_parity_structure_on_longer_windows(window):
    assert len(window_chronologies(parity_line(), window)) == 2


def test_closed_boundary_pins_the_first_period():
    assert len(window_chronologies(parity_line(), (-3, 3), "closed")) == 1


def test_pereyra_even_arrivals_from_zero():
    mkt = parity_line().restrict_arrivals(0)
    ch = pereyra_forward(mkt, 0, 7)
    assert line(ch, 0, 7) == ["m0", "m0", "m2", "m2", "m4", "m4", "m6", "m6"]
    assert is_stable_subject_to_tenure(mkt, ch, "closed") == (True, [])


def test_tenure_promotion_two_men():
    mkt = DynamicMarket([Man("m0", ("w",), 0, 2), Man("m1", ("w",), 1, 3)], {"w": ["m1", "m0"]})
    ch = pereyra_forward(mkt)
    assert line(ch, 0, 2) == ["m0", "m0", "m1"]
    demoted = Chronology((0, 2), {("w", 0): "m0", ("w", 1): "m1", ("w", 2): "m1"})
    ok, why = is_stable_subject_to_tenure(mkt, demoted, "closed")
    assert not ok and why[0][0] == "tenure"


def test_single_period_is_static_matching():
    mp = {"a": ["x", "y"], "b": ["y", "x"]}
    wp = {"x": ["b", "a"], "y": ["a", "b"]}
    mkt = DynamicMarket([Man(m, tuple(p), 0, 1) for m, p in mp.items()], wp)
    got = {frozenset((ch.assign[(w, 0)], w) for w in wp if ch.assign[(w, 0)]) for ch in window_chronologies(mkt, (0, 0), "closed")}
    assert got == stable_matchings(mp, wp)
    ch = pereyra_forward(mkt)
    assert frozenset((ch.assign[(w, 0)], w) for w in wp) == gale_shapley(MarriageMarket(mp, wp), "men")


def test_unstable_static_embedding_rejected():
    mkt = DynamicMarket([Man("m", ("w",), 0, 1)], {"w": ["m"]})
    ok, why = is_stable_subject_to_tenure(mkt, Chronology((0, 0), {("w", 0): None}), "closed")
    assert not ok and why[0][0] == "blocking"


def test_finite_presence_checks():
    assert check_finite_presence(parity_line(), (-5, 5)) == (True, None)
    ok, t = check_finite_presence(no_finite_presence(), (-3, 0))
    assert ok is False and t in (-3, -2)
    assert check_finite_presence(DynamicMarket([], {"w": []}), (0, 3)) == (True, None)


def test_untruncated_family_refused_by_encoder():
    with pytest.raises(FinitePresenceError):
        encode_dynamic_window(no_finite_presence(), (-3, -1))


def test_truncations_move_the_partner_at_minus_one():
    seen = []
    for T in range(2, 7):
        ps = partners_at(no_finite_presence(T), (-T, -1), -1, "w")
        assert len(ps) == 1
        seen.append(ps.pop())
    assert seen == [f"m{T}" for T in range(2, 7)]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_pereyra_is_stable_and_among_models(seed):
    mkt, hi = random_dynamic(random.Random(seed))
    ch = pereyra_forward(mkt, 0, hi)
    assert is_stable_subject_to_tenure(mkt, ch, "closed") == (True, [])
    models = window_chronologies(mkt, (0, hi), "closed")
    assert any(m.assign == ch.assign for m in models)
    for m in models:
        assert is_stable_subject_to_tenure(mkt, m, "closed")[0]


def all_chronologies(mkt, lo, hi):
    """Every assignment of present, mutually acceptable men to women, injective per period."""
    slots = []
    for t in range(lo, hi + 1):
        present = [m for m in mkt.present(t)]
        per_w = [[None] + [m.name for m in present if mkt.mutually_acceptable(m, w)] for w in mkt.women]
        slots.append([c for c in product(*per_w) if len([x for x in c if x]) == len({x for x in c if x})])
    for choice in product(*slots):
        yield Chronology((lo, hi), {(w, lo + k): c[j] for k, c in enumerate(choice) for j, w in enumerate(mkt.women)})


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_window_models_equal_exhaustive_search(seed):
    mkt, hi = random_dynamic(random.Random(seed), n_men=3, horizon=3)
    expected = {
        frozenset(c.assign.items()) for c in all_chronologies(mkt, 0, hi)
        if is_stable_subject_to_tenure(mkt, c, "closed")[0]
    }
    got = [frozenset(c.assign.items()) for c in window_chronologies(mkt, (0, hi), "closed")]
    assert len(got) == len(set(got)) and set(got) == expected
