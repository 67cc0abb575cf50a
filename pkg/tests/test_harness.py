import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compactness.harness import (
    FAMILIES, InfiniteInstance, InstanceFault, family, first_variables, fragment, ladder_solve, prefix_limit,
    prefix_passes,
)
from compactness.logic import Atom, Not, solve, solve_formulas, to_cnf

# small parameters keep every family cheap enough to sweep
SMALL = {
    "szpilrajn": {},
    "disjoint_pairs": {},
    "parity_line": {},
    "no_finite_presence": {"T_values": (2, 3, 4)},
    "contradiction": {},
    "demand": {},
    "stoch": {},
}


def sat(fs):
    return solve(to_cnf(fs)) is not None


def test_empty_fragment():
    assert fragment(family("szpilrajn"), 0) == []
    assert sat([])


def test_negative_k_rejected():
    with pytest.raises(ValueError):
        fragment(family("szpilrajn"), -1)


def test_szpilrajn_fragment_of_ten():
    fs = fragment(family("szpilrajn"), 10)
    assert len(fs) == 10 and sat(fs)


def test_disjoint_pairs_all_mentioned_pairs_matched():
    inst = family("disjoint_pairs")
    fs = fragment(inst, 40)
    m = solve_formulas(fs)
    matched = [l for l in first_variables(inst, 40) if l[0] == "matched" and l[1][1:] == l[2][1:]]
    mentioned = [l for l in matched if any(l in _labels(f) for f in fs)]
    assert mentioned and all(m[l] for l in mentioned)


def _labels(f):
    if f.kind == "atom":
        return {f.args[0]}
    return set().union(*(_labels(g) for g in f.args))


def test_stream_is_restartable_and_deterministic():
    inst = family("parity_line")
    assert fragment(inst, 30) == fragment(inst, 30)
    assert fragment(inst, 10) == fragment(inst, 30)[:10]


def test_generator_failure_reported():
    def bad():
        yield Atom("p")
        raise RuntimeError("boom")

    with pytest.raises(InstanceFault):
        fragment(InfiniteInstance("bad", bad), 5)
    with pytest.raises(InstanceFault):
        fragment(InfiniteInstance("junk", lambda: iter([Atom("p"), "q"])), 2)


def test_contradiction_unsat_once_both_appear():
    inst = family("contradiction", at=5)
    rep = ladder_solve(inst, 12)
    assert rep.first_unsat == 6  # P first, the negation as formula number at + 1
    assert all(r.sat for r in rep.rungs if r.k < 6)
    assert all(not r.sat for r in rep.rungs if r.k >= 6)


def test_disjoint_pairs_stabilize_at_first_mention():
    inst = family("disjoint_pairs")
    rep = ladder_solve(inst, 40, track=12)
    for lab in rep.tracked:
        first = next(r.k for r in rep.rungs if r.values.get(lab) is not None)
        assert rep.stabilization[lab] is not None and rep.stabilization[lab][1] == first


def test_parity_line_choice_never_stabilizes():
    rep = ladder_solve(family("parity_line"), 60, step=10, track=6)
    assert all(r.sat for r in rep.rungs)
    unstable = [l for l, s in rep.stabilization.items() if s is None]
    assert unstable
    assert all(l[0] == "matched" for l in unstable)
    json.loads(rep.to_json())


def test_szpilrajn_prefix_is_natural_order():
    inst = family("szpilrajn")
    labels = first_variables(inst, 6)
    pre = prefix_limit(inst, 6, 60)
    assert pre is not None
    for lab, v in pre.items():
        _, a, b = lab
        assert v == (a > b)
    assert set(pre) == set(labels)


def test_parity_line_two_surviving_prefixes():
    inst = family("parity_line")
    survivors = prefix_limit(inst, 6, 80, step=10, all_survivors=True)
    assert len(survivors) == 2
    # the two survivors differ on every matched variable of the prefix
    a, b = survivors
    assert all(a[l] != b[l] for l in a)


def test_contradiction_prefix_exhausted():
    assert prefix_limit(family("contradiction"), 3, 12, step=2) is None


def test_no_finite_presence_prefix_exhausted():
    inst = family("no_finite_presence", T_values=(2, 3, 4, 5))
    assert prefix_limit(inst, 4, 200, step=10) is None


def test_prefix_length_capped():
    with pytest.raises(ValueError):
        prefix_limit(family("szpilrajn"), 25, 10)


def test_unknown_family():
    with pytest.raises(KeyError):
        family("nope")


def test_budget_stops_the_ladder():
    rep = ladder_solve(family("szpilrajn"), 200, step=1, budget=0)
    assert rep.budget_exhausted and len(rep.rungs) < 200


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_fragment_monotonicity(name):
    inst = family(name, **SMALL[name])
    rep = ladder_solve(inst, 60, step=6, track=4)
    flags = [r.sat for r in rep.rungs]
    # once UNSAT, never SAT again; checked by solving each rung afresh
    fresh = [sat(fragment(inst, r.k)) for r in rep.rungs]
    assert fresh == flags
    assert all(not b for a, b in zip(flags, flags[1:]) if not a)


@pytest.mark.parametrize("name", ["szpilrajn", "disjoint_pairs", "parity_line", "demand"])
def test_prefix_soundness(name):
    inst = family(name, **SMALL[name])
    pre = prefix_limit(inst, 4, 40, step=10)
    assert pre is not None
    assert prefix_passes(inst, pre, range(10, 41, 10))


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.booleans()), min_size=1, max_size=12))
def test_monotonicity_on_literal_streams(lits):
    fs = [Atom(f"p{i}") if pos else Not(Atom(f"p{i}")) for i, pos in lits]
    inst = InfiniteInstance("lits", lambda: iter(fs))
    flags = [r.sat for r in ladder_solve(inst, len(fs)).rungs]
    assert flags == sorted(flags, reverse=True)
    for k, f in enumerate(flags, start=1):
        assert f == sat(fs[:k])
