"""Acceptance criteria, each run at its stated size and tolerance.

Every test records a PASS/FAIL line (printed in the terminal summary and
immediately to stdout) before asserting.
"""

import random
import time
from contextlib import contextmanager
from fractions import Fraction
from itertools import permutations, product

import numpy as np
import pytest

import conftest
from compactness import couples, graphical_games as gg, harness, matching, networks, orders
from compactness import revealed_pref as rp
from compactness import stoch_choice as sc
from compactness.dynamic_matching import (
    is_stable_subject_to_tenure, parity_line, partners_at, no_finite_presence, pereyra_forward, window_chronologies,
)
from compactness.logic import And, Atom, Iff, Implies, Not, Or, count_models, solve, to_cnf

from fixtures import CHAIN3, NO_GAIN, NO_STABLE_COUPLES, SINGLE_TRADE, random_couples, random_network
from oracles import count_extensions, garp_bruteforce, stable_matchings, walrasian_grid_allocations

F = Fraction


@contextmanager
def criterion(cid, title):
    detail = {"text": ""}
    try:
        yield detail
    except BaseException as e:
        conftest.CRITERIA[cid] = (title, False, detail["text"] or f"{type(e).__name__}: {e}"[:200])
        print(f"FAIL  {cid}  {title}")
        raise
    conftest.CRITERIA[cid] = (title, True, detail["text"])
    print(f"PASS  {cid}  {title}  ({detail['text']})")


# --- 1 solver completeness ----------------------------------------------------


def random_formula(rng, names, depth):
    if depth == 0 or rng.random() < 0.25:
        a = Atom(rng.choice(names))
        return Not(a) if rng.random() < 0.3 else a
    k = rng.randrange(5)
    if k == 0:
        return Not(random_formula(rng, names, depth - 1))
    a, b = random_formula(rng, names, depth - 1), random_formula(rng, names, depth - 1)
    return [And, Or, Implies, Iff][k - 1](a, b)


def table_eval(f, cols):
    """Vectorized evaluation over every assignment at once."""
    k = f.kind
    if k == "atom":
        return cols[f.args[0]]
    vals = [table_eval(g, cols) for g in f.args]
    if k == "not":
        return ~vals[0]
    if k == "and":
        return np.logical_and.reduce(vals)
    if k == "or":
        return np.logical_or.reduce(vals)
    if k == "implies":
        return ~vals[0] | vals[1]
    return vals[0] == vals[1]


def test_c01_solver_completeness():
    with criterion("C01", "solver agrees with truth tables on 1000 random sets, <= 16 vars, < 10 s") as d:
        rng = random.Random(1)
        solve_time, sat_count = 0.0, 0
        for _ in range(1000):
            nv = rng.randint(1, 16)
            names = [f"x{i}" for i in range(nv)]
            fs = [random_formula(rng, names, rng.randint(1, 4)) for _ in range(rng.randint(1, 3 * nv))]
            grid = np.array(list(product((False, True), repeat=nv)), dtype=bool).reshape(-1, nv)
            cols = {n: grid[:, i] for i, n in enumerate(names)}
            truth = np.logical_and.reduce([table_eval(f, cols) for f in fs]).any()
            t0 = time.perf_counter()
            m = solve(to_cnf(fs))
            solve_time += time.perf_counter() - t0
            assert (m is not None) == bool(truth)
            if m is not None:
                sat_count += 1
                full = {n: np.array([m.get(n, False)]) for n in names}
                assert all(table_eval(f, full)[0] for f in fs)
        d["text"] = f"{sat_count} SAT / {1000 - sat_count} UNSAT, solve time {solve_time:.2f} s"
        assert solve_time < 10


# --- 2 Szpilrajn bijection --------------------------------------------------------


def test_c02_szpilrajn_bijection():
    with criterion("C02", "extension model counts equal brute force on 200 partial orders, <= 5 elements") as d:
        rng = random.Random(2)
        total = 0
        for _ in range(200):
            n = rng.randint(1, 5)
            elems = [f"e{i}" for i in range(n)]
            perm = rng.sample(elems, n)
            pairs = orders.transitive_closure(
                [(perm[i], perm[j]) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.3]
            )
            o = orders.StrictPartialOrder(elems, pairs)
            fs = orders.encode_extension(o)
            if fs:
                cs = to_cnf(fs)
                got = count_models(cs, [l for l in orders.gt_labels(elems) if l in cs])
            else:
                got = 1
            want = count_extensions(elems, pairs)
            assert got == want
            total += want
        d["text"] = f"{total} extensions counted in total"


# --- 3 matching bijection -------------------------------------------------------


def random_market(rng, nm, nw):
    men = [f"m{i}" for i in range(nm)]
    women = [f"w{j}" for j in range(nw)]
    p = rng.uniform(0.4, 1)
    mp = {m: rng.sample(women, sum(rng.random() < p for _ in women)) for m in men}
    wp = {w: rng.sample(men, sum(rng.random() < p for _ in men)) for w in women}
    return matching.MarriageMarket(mp, wp)


def test_c03_matching_bijection():
    with criterion("C03", "stable models = enumerate_stable on 300 markets <= 6x6; man-optimal; flawed all-FALSE") as d:
        rng = random.Random(3)
        multi = 0
        for _ in range(300):
            mkt = random_market(rng, rng.randint(0, 6), rng.randint(0, 6))
            models = matching.stable_models(mkt)
            assert len(models) == len(set(models))
            enum = matching.enumerate_stable(mkt)
            assert set(models) == enum
            multi += len(enum) > 1
            ctx = matching.man_optimal_context(mkt)
            opt = matching.stable_models(mkt, matching.encode_man_optimal(mkt, ctx))
            assert opt == [matching.gale_shapley(mkt, "men")]
            if mkt.men and mkt.women:
                fl = to_cnf(matching.encode_flawed_alternative(mkt))
                false = [fl.lit(l, False) for l in fl.source_labels]
                assert solve(fl, false) is not None
        d["text"] = f"{multi} markets with several stable matchings"


# --- 4 strategy-proofness --------------------------------------------------------


def test_c04_strategy_proofness():
    with criterion("C04", "no profitable misreport over 200 full-list 3x3 markets, all ordered sublists") as d:
        rng = random.Random(4)
        men, women = ["m0", "m1", "m2"], ["w0", "w1", "w2"]
        lies = matching.ordered_sublists(women)
        checks = 0
        for _ in range(200):
            mkt = matching.MarriageMarket(
                {m: rng.sample(women, 3) for m in men}, {w: rng.sample(men, 3) for w in women}
            )
            for m in men:
                for lie in lies:
                    r = matching.check_manipulation(mkt, m, lie)
                    assert not r.improves
                    checks += 1
        d["text"] = f"{checks} misreports, 0 improvements"


# --- 5 couples --------------------------------------------------------------------


def exhaustively_unstable_at_k(mkt):
    hs = list(mkt.hospitals)
    docs = list(mkt.doctors)
    for choice in product([None] + hs, repeat=len(docs)):
        out = couples.PerturbedOutcome(dict(zip(docs, choice)), dict(mkt.capacity))
        try:
            if couples.is_stable_with_couples(mkt, out)[0]:
                return False
        except couples.CouplesError:
            continue
    return True


def test_c05_couples():
    with criterion("C05", "couples encoder SAT iff oracle on 100 instances; |k-k*| <= 2; a fixture needs k* != k") as d:
        rng = random.Random(5)
        sat = 0
        for _ in range(100):
            mkt = random_couples(rng)
            outs = couples.solve_couples(mkt, limit=4)
            bf = couples.bruteforce_near_feasible(mkt)
            assert bool(outs) == (bf is not None)
            for o in outs:
                assert all(abs(o.kstar[h] - mkt.capacity[h]) <= 2 for h in mkt.hospitals)
                assert couples.is_stable_with_couples(mkt, o)[0]
            sat += bool(outs)
        assert exhaustively_unstable_at_k(NO_STABLE_COUPLES)
        outs = couples.solve_couples(NO_STABLE_COUPLES, limit=None)
        assert outs and all(o.kstar != NO_STABLE_COUPLES.capacity for o in outs)
        d["text"] = f"{sat}/100 SAT; fixture has no stable outcome at k, {len(outs)} perturbed outcomes"


# --- 6 Afriat / GARP ----------------------------------------------------------------


def test_c06_afriat_garp():
    with criterion("C06", "GARP <=> Afriat <=> fragment SAT at n_max=4 on 200 datasets; violating pair UNSAT") as d:
        rng = random.Random(6)
        bad = 0
        for _ in range(200):
            obs = [
                ((rng.randint(1, 4), rng.randint(1, 4)), (F(rng.randint(0, 8), 2), F(rng.randint(0, 8), 2)))
                for _ in range(rng.randint(1, 4))
            ]
            ds = rp.DemandDataset(obs)
            garp = rp.check_garp(ds)[0]
            assert garp == garp_bruteforce(obs)
            af = rp.afriat_feasible(ds)
            assert (af is not None) == garp
            if af is not None:
                assert rp.check_afriat(ds, *af)
            cfg = rp.make_grid_config(ds, 4)
            gu = rp.solve_fragment(ds, cfg)
            assert (gu is not None) == garp
            if gu is not None:
                assert rp.verify_rationalization(ds, gu, cfg)
            bad += not garp
        pair = rp.DemandDataset([((1, 2), (1, 2)), ((2, 1), (2, 1))])
        assert rp.solve_fragment(pair, rp.make_grid_config(pair, 4)) is None
        d["text"] = f"{bad} GARP violations among 200, all three routes agree"


# --- 7 stochastic choice ------------------------------------------------------------


def test_c07_stochastic_choice():
    with criterion("C07", "cyclic 0.7 data: ARSP slack -1/10, LP infeasible, encoder UNSAT at n_max 8; LP round-trip") as d:
        cyc = sc.StochDataset("abc", [("ab", "a", "7/10"), ("bc", "b", "7/10"), ("ac", "c", "7/10")])
        ok, seq = sc.check_arsp(cyc)
        assert not ok
        assert sc.arsp_slack(cyc, seq) == F(-1, 10)
        assert sum(cyc.entries[e] for e in seq) == F(21, 10)
        events = [(frozenset(A), x) for A, x in seq]
        assert max(sum(sc.tops(o, A, x) for A, x in events) for o in permutations("abc")) == 2
        assert sc.rationalize_finite(cyc) is None
        assert sc.solve_stoch(cyc, 8) is None
        rng = random.Random(7)
        menus = ["ab", "bc", "ac", "abc"]
        for _ in range(20):
            orders_ = list(permutations("abc"))
            raw = [rng.randint(0, 5) for _ in orders_]
            raw[0] += 1
            dist = sc.OrderDistribution(tuple("abc"), {o: F(r, sum(raw)) for o, r in zip(orders_, raw)})
            ds = dist.induced_dataset(menus)
            w = sc.rationalize_finite(ds)
            assert w is not None
            for (A, x), p in ds.entries.items():
                assert w.choice_prob(A, x) == p
            assert sc.check_marginal_consistency(sc.MarginalFamily.from_distribution(w, 3))[0]
        d["text"] = "sum 21/10 vs best order 2; 20 rationalizable fixtures reproduced exactly"


# --- 8 epsilon-Walrasian --------------------------------------------------------------


def substitutable_nets(count, seed):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        net = random_network(rng)
        if max(len(net.objects_of[i]) for i in net.agents) > 2:
            continue
        if all(networks.check_substitutable(net, i)[0] for i in net.agents):
            out.append(net)
    return out


def test_c08_eps_walrasian():
    with criterion("C08", "grid outcomes verify at |O_i|/n; refine_to_exact exact on 20 fixtures; oracle agreement") as d:
        nets = [SINGLE_TRADE, NO_GAIN, CHAIN3] + substitutable_nets(17, 8)
        traded = 0
        for net in nets:
            for n in (1, 2, 4):
                out = networks.solve_eps_walrasian(net, n)
                assert out is not None
                eps = {i: F(len(net.objects_of[i]), n) for i in net.agents}
                assert networks.verify_eps_walrasian(net, out, eps, networks.make_grid(net, n))
            exact = networks.refine_to_exact(net)
            assert networks.verify_eps_walrasian(net, exact, 0)
            oracle = walrasian_grid_allocations(net)
            assert tuple(sorted(exact.holder.items(), key=lambda kv: str(kv[0]))) in oracle
            assert oracle == {
                tuple(sorted(o.holder.items(), key=lambda kv: str(kv[0]))) for o in networks.walrasian_bruteforce(net)
            }
            traded += bool(exact.traded(net))
        d["text"] = f"{len(nets)} fixtures, {traded} with trade at the exact outcome"


# --- 9 epsilon-Nash -----------------------------------------------------------------------


def pennies():
    match = {(a, b): (1 if a == b else -1) for a in "HT" for b in "HT"}
    return gg.GraphicalGame(
        {1: [1, 2], 2: [1, 2]}, {1: "HT", 2: "HT"}, {1: match, 2: {(b, a): -v for (a, b), v in match.items()}}
    )


def line_game(n):
    """Players on a path; each is paid for matching the left neighbour and mismatching the right."""
    players = list(range(n))
    nbrs = {i: [j for j in (i - 1, i, i + 1) if 0 <= j < n] for i in players}

    def pay(i):
        def u(prof):
            v = 0
            if i - 1 in prof:
                v += 1 if prof[i - 1] == prof[i] else 0
            if i + 1 in prof:
                v += 1 if prof[i + 1] != prof[i] else 0
            return v

        return u

    return gg.GraphicalGame(nbrs, {i: "ab" for i in players}, {i: pay(i) for i in players})


def test_c09_eps_nash():
    with criterion("C09", "decoded profiles verify at planned eps; pennies uniform pair at 1/4; ladder gains decrease") as d:
        from compactness.logic import enumerate_models

        for g, eps in [(pennies(), F(1, 4)), (pennies(), F(1, 2)), (line_game(3), F(1)), (line_game(4), F(1))]:
            prof = gg.solve_eps_nash(g, eps)
            assert prof is not None and gg.verify_eps_nash(g, prof, eps)[0]
        g = pennies()
        plan = gg.plan_discretization(g, F(1, 4))
        cs = to_cnf(gg.encode_eps_nash(g, F(1, 4), plan))
        half = (F(1, 2), F(1, 2))
        profiles = [gg.decode_profile(m, g, plan) for m in enumerate_models(cs, cs.source_labels)]
        assert {1: half, 2: half} in profiles
        assert all(gg.verify_eps_nash(g, p, F(1, 4))[0] for p in profiles)
        rungs = gg.nash_ladder(g, [F(1, 2), F(1, 4), F(1, 8)])
        gains = [r.gain for r in rungs]
        assert all(r.gain <= r.eps for r in rungs)
        assert all(a >= b for a, b in zip(gains, gains[1:]))
        d["text"] = f"{len(profiles)} pennies models at 1/4; ladder gains {[str(x) for x in gains]}"


# --- 10 dynamic parity ----------------------------------------------------------------------


def test_c10_dynamic_parity():
    with criterion("C10", "parity_line [-3,3] has 2 complementary models; Pereyra even arrivals; no stable limit at -1") as d:
        chs = window_chronologies(parity_line(), (-3, 3))
        assert len(chs) == 2
        par = [{int(c.assign[("w", t)][1:]) % 2 for t in range(-3, 4)} for c in chs]
        assert sorted(map(sorted, par)) == [[0], [1]]
        mkt = parity_line().restrict_arrivals(0)
        ch = pereyra_forward(mkt, 0, 9)
        assert all(int(ch.assign[("w", t)][1:]) % 2 == 0 for t in range(10))
        assert {ch.assign[("w", t)] for t in range(10)} == {f"m{k}" for k in range(0, 10, 2)}
        assert is_stable_subject_to_tenure(mkt, ch, "closed")[0]
        partners = [partners_at(no_finite_presence(T), (-T, -1), -1, "w") for T in range(2, 9)]
        assert all(len(p) == 1 for p in partners)
        assert len(set().union(*partners)) == 7  # a different man at -1 for every T
        inst = harness.family("no_finite_presence", T_values=tuple(range(2, 9)))
        assert harness.prefix_limit(inst, 4, 200, step=10) is None
        d["text"] = f"partners at -1 for T=2..8: {[sorted(p)[0] for p in partners]}; prefix_limit exhausted"


# --- 11 harness monotonicity ----------------------------------------------------------------


def test_c11_harness_monotonicity():
    with criterion("C11", "no UNSAT->SAT flip in any family; returned prefixes pass every tested rung") as d:
        summary = []
        for name in sorted(harness.FAMILIES):
            inst = harness.family(name)
            ks = list(range(4, 81, 4))
            flags = [solve(to_cnf(harness.fragment(inst, k))) is not None for k in ks]
            assert all(b <= a for a, b in zip(flags, flags[1:]))
            rep = harness.ladder_solve(inst, 80, step=4, track=4)
            assert [r.sat for r in rep.rungs] == flags
            pre = harness.prefix_limit(inst, 4, 80, step=8)
            if pre is not None:
                assert harness.prefix_passes(inst, pre, range(8, 81, 8))
            else:
                assert not all(flags) or not inst.nested
            summary.append(f"{name}:{'SAT' if all(flags) else 'UNSAT@' + str(ks[flags.index(False)])}")
        d["text"] = ", ".join(summary)
