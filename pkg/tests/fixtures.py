"""Instance generators and named fixtures shared by the module tests and the acceptance suite."""

from __future__ import annotations

import random
from fractions import Fraction

from compactness.couples import CouplesMarket
from compactness.networks import TradingNetwork

# no stable outcome at the listed capacities; the oracle finds kstar = {h0: 2, h1: 1}
NO_STABLE_COUPLES = CouplesMarket(
    {},
    {
        "c0": (("c0a", "c0b"), [(None, "h1"), ("h0", None), ("h1", None)]),
        "c1": (("c1a", "c1b"), [("h1", "h1"), (None, "h0"), ("h1", None), (None, "h1")]),
    },
    {"h0": (2, ["c1b"]), "h1": (2, ["c1a", "c0a", "c1b", "c0b"])},
)


def random_couples(rng: random.Random) -> CouplesMarket:
    hs = [f"h{j}" for j in range(rng.randint(1, 3))]
    singles = {f"s{i}": rng.sample(hs, rng.randint(0, len(hs))) for i in range(rng.randint(0, 2))}
    couples = {}
    for c in range(rng.randint(1, 2)):
        full = [(a, b) for a in hs for b in hs]
        chosen = rng.sample(full, rng.randint(0, min(3, len(full))))
        prefs = list(chosen)
        for a, b in chosen:
            for q in ((a, None), (None, b)):
                if q not in prefs:
                    prefs.insert(rng.randint(0, len(prefs)), q)
        extra = [q for q in [(h, None) for h in hs] + [(None, h) for h in hs] if q not in prefs]
        prefs += rng.sample(extra, rng.randint(0, min(1, len(extra))))
        couples[f"c{c}"] = ((f"c{c}a", f"c{c}b"), prefs)
    docs = list(singles) + [d for (pair, _) in couples.values() for d in pair]
    hospitals = {h: (rng.randint(0, 2), rng.sample(docs, rng.randint(0, len(docs)))) for h in hs}
    return CouplesMarket(singles, couples, hospitals)


def random_network(rng: random.Random, n_trades: int = 3) -> TradingNetwork:
    """Random trades among up to four agents with unit-demand-like integer utilities."""
    agents = ["a", "b", "c", "d"]
    trades = []
    for k in range(n_trades):
        s, b = rng.sample(agents, 2)
        trades.append((f"o{k}", s, b))
    net0 = TradingNetwork(trades, {i: (lambda X: 0) for i in agents})
    utils = {}
    for i in net0.agents:
        Oi = net0.objects_of[i]
        base = {o: rng.randint(0, 6) for o in Oi}
        endow = net0.endowment(i)

        def u(X, base=base, endow=endow, i=i):
            bought = [base[o] for o in X if o not in endow]
            sold = [base[o] for o in endow if o not in X]
            # buyers value their best purchase, sellers lose their best kept good
            return Fraction(max(bought, default=0) - max(sold, default=0))

        utils[i] = u
    return TradingNetwork(trades, utils)


SINGLE_TRADE = TradingNetwork([("o", "s", "b")], {"s": {"": 0, "o": 0}, "b": {"": 0, "o": 10}})
NO_GAIN = TradingNetwork([("o", "s", "b")], {"s": {"": 0, "o": 0}, "b": {"": 0, "o": 0}})
CHAIN3 = TradingNetwork(
    [("x", "a", "b"), ("y", "b", "c"), ("z", "c", "d")],
    {
        # keys are the bundles held at the end; endowment bundles are worth 0
        "a": {"x": 0, "": -1},
        "b": {"y": 0, "x": 2, "": "-inf", "x,y": -1},
        "c": {"z": 0, "y": 2, "": "-inf", "y,z": -1},
        "d": {"": 0, "z": 9},
    },
)
