"""One-to-one marriage markets.

Variables are ``("matched", m, w)``.  Being unmatched is never a variable:
it is read off a model as "no TRUE matched(m, .)".
"""

from __future__ import annotations

from collections.abc import Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from itertools import combinations, permutations

from .logic import And, Atom, Formula, Not, Or, at_most_one, enumerate_models, implies_any, solve_formulas, to_cnf

Matching = frozenset  # of (man, woman) pairs


class MarketError(ValueError):
    pass


@dataclass(frozen=True)
class MarriageMarket:
    men: tuple
    women: tuple
    men_prefs: Mapping[Hashable, tuple]
    women_prefs: Mapping[Hashable, tuple]
    _rank: dict = field(default=None, compare=False, repr=False)

    def __init__(self, men_prefs: Mapping[Hashable, Sequence], women_prefs: Mapping[Hashable, Sequence]):
        object.__setattr__(self, "men", tuple(men_prefs))
        object.__setattr__(self, "women", tuple(women_prefs))
        object.__setattr__(self, "men_prefs", {m: tuple(p) for m, p in men_prefs.items()})
        object.__setattr__(self, "women_prefs", {w: tuple(p) for w, p in women_prefs.items()})
        self._validate()
        rank = {}
        for a, p in list(self.men_prefs.items()) + list(self.women_prefs.items()):
            rank[a] = {x: i for i, x in enumerate(p)}
        object.__setattr__(self, "_rank", rank)

    def _validate(self) -> None:
        if set(self.men) & set(self.women):
            raise MarketError("an id is used on both sides")
        for side, other in ((self.men_prefs, set(self.women)), (self.women_prefs, set(self.men))):
            for a, p in side.items():
                if len(set(p)) != len(p):
                    raise MarketError(f"duplicate entry in preference list of {a}")
                for x in p:
                    if x not in other:
                        raise MarketError(f"{a} lists unknown partner {x}")

    def prefs(self, agent: Hashable) -> tuple:
        return self.men_prefs[agent] if agent in self.men_prefs else self.women_prefs[agent]

    def rank(self, agent: Hashable, partner: Hashable) -> int | None:
        return self._rank[agent].get(partner)

    def acceptable(self, agent: Hashable, partner: Hashable) -> bool:
        return partner in self._rank[agent]

    def prefers(self, agent: Hashable, a: Hashable, b: Hashable | None) -> bool:
        """Does ``agent`` strictly prefer ``a`` to ``b`` (``None`` = unmatched)?"""
        ra = self.rank(agent, a)
        if ra is None:
            return False
        if b is None:
            return True
        rb = self.rank(agent, b)
        return rb is None or ra < rb

    def mutually_acceptable(self, m: Hashable, w: Hashable) -> bool:
        return self.acceptable(m, w) and self.acceptable(w, m)

    def with_man_prefs(self, man: Hashable, prefs: Sequence) -> MarriageMarket:
        mp = dict(self.men_prefs)
        mp[man] = tuple(prefs)
        return MarriageMarket(mp, self.women_prefs)

    def with_woman_prefs(self, woman: Hashable, prefs: Sequence) -> MarriageMarket:
        wp = dict(self.women_prefs)
        wp[woman] = tuple(prefs)
        return MarriageMarket(self.men_prefs, wp)

    def restrict(self, men: Iterable, women: Iterable) -> MarriageMarket:
        ms, ws = set(men), set(women)
        return MarriageMarket(
            {m: [w for w in p if w in ws] for m, p in self.men_prefs.items() if m in ms},
            {w: [m for m in p if m in ms] for w, p in self.women_prefs.items() if w in ws},
        )


def matched(m: Hashable, w: Hashable) -> Formula:
    return Atom(("matched", m, w))


def matched_labels(mkt: MarriageMarket) -> list[tuple]:
    return [("matched", m, w) for m in mkt.men for w in mkt.women]


def _check_matching(mkt: MarriageMarket, mu: Iterable[tuple]) -> dict:
    partner: dict = {}
    for m, w in mu:
        if m not in mkt.men_prefs or w not in mkt.women_prefs:
            raise MarketError(f"pair ({m}, {w}) is not a man-woman pair of the market")
        for a, b in ((m, w), (w, m)):
            if a in partner:
                raise MarketError(f"{a} appears twice in the matching")
            partner[a] = b
    return partner


def blocking_pair_formulas(mkt: MarriageMarket) -> list[Formula]:
    fs = []
    for m in mkt.men:
        for w in mkt.women:
            if not mkt.mutually_acceptable(m, w):
                continue
            better_w = mkt.men_prefs[m][: mkt.rank(m, w)]
            better_m = mkt.women_prefs[w][: mkt.rank(w, m)]
            fs.append(implies_any(Not(matched(m, w)),
                                  [matched(m, x) for x in better_w] + [matched(y, w) for y in better_m]))
    return fs


def _quota_and_ir(mkt: MarriageMarket) -> list[Formula]:
    fs: list[Formula] = []
    for m in mkt.men:
        fs += at_most_one([matched(m, w) for w in mkt.women])
    for w in mkt.women:
        fs += at_most_one([matched(m, w) for m in mkt.men])
    for m in mkt.men:
        for w in mkt.women:
            if not mkt.mutually_acceptable(m, w):
                fs.append(Not(matched(m, w)))
    return fs


def encode_stability(mkt: MarriageMarket) -> list[Formula]:
    """At-most-one per agent, unacceptability units and no-blocking implications."""
    return _quota_and_ir(mkt) + blocking_pair_formulas(mkt)


def encode_flawed_alternative(mkt: MarriageMarket) -> list[Formula]:
    """The pairwise-exclusion 'stability' encoding that the all-FALSE model satisfies."""
    fs = _quota_and_ir(mkt)
    for m in mkt.men:
        for m2 in mkt.men:
            if m2 == m:
                continue
            for w in mkt.women:
                for w2 in mkt.women:
                    if w2 != w and mkt.prefers(m, w, w2) and mkt.prefers(w, m, m2):
                        fs.append(Not(And(matched(m, w2), matched(m2, w))))
    return fs


def decode_matching(model: Mapping, mkt: MarriageMarket) -> Matching:
    return frozenset((m, w) for m in mkt.men for w in mkt.women if model.get(("matched", m, w), False))


def stable_models(mkt: MarriageMarket, formulas: list[Formula] | None = None) -> list[Matching]:
    """All matchings encoded by models of ``formulas`` (default: the stability encoding)."""
    fs = encode_stability(mkt) if formulas is None else formulas
    if not fs:
        return [frozenset()]
    cs = to_cnf(fs)
    labels = [lab for lab in matched_labels(mkt) if lab in cs]
    return [decode_matching(m, mkt) for m in enumerate_models(cs, labels)]


def gale_shapley(mkt: MarriageMarket, proposing: str = "men") -> Matching:
    """Deferred acceptance; free proposers act in registration order."""
    if proposing not in ("men", "women"):
        raise ValueError("proposing must be 'men' or 'women'")
    props = mkt.men_prefs if proposing == "men" else mkt.women_prefs
    order = list(props)
    nxt = {a: 0 for a in order}
    held: dict = {}  # receiver -> proposer
    free = list(order)
    while free:
        a = free.pop(0)
        lst = props[a]
        while nxt[a] < len(lst):
            b = lst[nxt[a]]
            nxt[a] += 1
            if not mkt.acceptable(b, a):
                continue
            cur = held.get(b)
            if cur is None:
                held[b] = a
                break
            if mkt.prefers(b, a, cur):
                held[b] = a
                free.append(cur)
                break
    if proposing == "men":
        return frozenset((m, w) for w, m in held.items())
    return frozenset((m, w) for m, w in held.items())


def is_stable(mkt: MarriageMarket, mu: Iterable[tuple]) -> tuple[bool, list[tuple]]:
    """Stability check; returns ``(ok, violations)``.

    Violations are ``("unacceptable", m, w)`` for individually irrational pairs
    and ``("blocking", m, w)`` for blocking pairs.
    """
    partner = _check_matching(mkt, mu)
    out: list[tuple] = []
    for m, w in sorted(mu, key=repr):
        if not mkt.mutually_acceptable(m, w):
            out.append(("unacceptable", m, w))
    for m in mkt.men:
        for w in mkt.women:
            if partner.get(m) == w or not mkt.mutually_acceptable(m, w):
                continue
            if mkt.prefers(m, w, partner.get(m)) and mkt.prefers(w, m, partner.get(w)):
                out.append(("blocking", m, w))
    return not out, out


def enumerate_stable(mkt: MarriageMarket, bound: int = 14) -> set[Matching]:
    """Every stable matching, by backtracking over individually rational pairings."""
    if len(mkt.men) + len(mkt.women) > bound:
        raise MarketError(f"market has more than {bound} agents")
    men = list(mkt.men)
    found: set[Matching] = set()

    def rec(i: int, used: set, pairs: list):
        if i == len(men):
            mu = frozenset(pairs)
            if is_stable(mkt, mu)[0]:
                found.add(mu)
            return
        m = men[i]
        rec(i + 1, used, pairs)
        for w in mkt.men_prefs[m]:
            if w not in used and mkt.acceptable(w, m):
                used.add(w)
                pairs.append((m, w))
                rec(i + 1, used, pairs)
                pairs.pop()
                used.discard(w)

    rec(0, set(), [])
    return found


@dataclass(frozen=True)
class ManOptimalContext:
    """Men matched in some stable matching and their best achievable partner."""

    best_woman: Mapping[Hashable, Hashable]

    @property
    def matched_men(self) -> frozenset:
        return frozenset(self.best_woman)


def man_optimal_context(mkt: MarriageMarket, stable: Iterable[Matching] | None = None) -> ManOptimalContext:
    stable = enumerate_stable(mkt) if stable is None else stable
    best: dict = {}
    for mu in stable:
        for m, w in mu:
            if m not in best or mkt.prefers(m, w, best[m]):
                best[m] = w
    return ManOptimalContext({m: best[m] for m in mkt.men if m in best})


def man_optimal_formulas(mkt: MarriageMarket, ctx: ManOptimalContext) -> list[Formula]:
    fs = []
    for m, wm in ctx.best_woman.items():
        prefs = mkt.men_prefs[m]
        fs.append(Or([matched(m, w) for w in prefs[: prefs.index(wm) + 1]]))
    return fs


def encode_man_optimal(mkt: MarriageMarket, ctx: ManOptimalContext) -> list[Formula]:
    """Stability plus, per man in the context, a disjunction over women at least as good as his best."""
    return encode_stability(mkt) + man_optimal_formulas(mkt, ctx)


def man_optimal_via_sat(mkt: MarriageMarket) -> Matching:
    fs = encode_man_optimal(mkt, man_optimal_context(mkt))
    if not fs:
        return frozenset()
    model = solve_formulas(fs)
    if model is None:  # pragma: no cover - contradicts the finite theory
        raise AssertionError("man-optimal encoding unexpectedly UNSAT")
    return decode_matching(model, mkt)


def partner_of(mu: Iterable[tuple], agent: Hashable):
    for m, w in mu:
        if m == agent:
            return w
        if w == agent:
            return m
    return None


@dataclass(frozen=True)
class ManipulationReport:
    man: Hashable
    misreport: tuple
    truthful_partner: Hashable | None
    manipulated_partner: Hashable | None
    improves: bool
    # with the true list, some stable matching gives him a woman at least as
    # good as the manipulated partner (checked by SAT)
    reduction_sat: bool | None


def check_manipulation(mkt: MarriageMarket, man: Hashable, misreport: Sequence) -> ManipulationReport:
    """Compare the man-optimal outcome under truth-telling and under ``misreport``."""
    truthful = partner_of(gale_shapley(mkt, "men"), man)
    lied = partner_of(gale_shapley(mkt.with_man_prefs(man, misreport), "men"), man)
    improves = lied is not None and mkt.prefers(man, lied, truthful)
    reduction = None
    if lied is not None and mkt.acceptable(man, lied):
        prefs = mkt.men_prefs[man]
        extra = Or([matched(man, w) for w in prefs[: prefs.index(lied) + 1]])
        reduction = solve_formulas(encode_stability(mkt) + [extra]) is not None
    return ManipulationReport(man, tuple(misreport), truthful, lied, improves, reduction)


def ordered_sublists(items: Sequence) -> list[tuple]:
    """All ordered sublists (any subset in any order), including the empty list."""
    out: list[tuple] = []
    for r in range(len(items) + 1):
        for sub in combinations(items, r):
            out.extend(permutations(sub))
    return out
