"""Many-to-one matching with couples and perturbed hospital capacities.

Variables:

* ``("matched", d, h)`` for every doctor and hospital,
* ``("matched", d, None)`` for couple members: "d is unmatched while the
  partner is matched",
* ``("quota", h, q)`` for the adjusted capacity ``q`` of ``h``, with ``q``
  ranging over ``k-2..k+2`` clipped at 0.

Couple preference lists are normalized on construction: a pair ``(h, h2)``
ranked below ``(h, None)`` or ``(None, h2)`` is dropped, since any block it
could take part in is also a block through the single placement.
"""

from __future__ import annotations

from collections.abc import Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from itertools import combinations, product

from .logic import (
    And, Atom, Formula, Iff, Implies, Not, Or, at_most_one, enumerate_models, implies_any, to_cnf,
)

MAX_RANKED = 12
EMPTY = None


class CouplesError(ValueError):
    pass


def validate_downward_closed(prefs: Iterable[tuple]) -> bool:
    """Every ranked pair of actual hospitals has both single placements ranked."""
    ranked = set(map(tuple, prefs))
    for a, b in ranked:
        if a is not None and b is not None:
            if (a, None) not in ranked or (None, b) not in ranked:
                return False
    return True


@dataclass(frozen=True)
class Couple:
    first: Hashable
    second: Hashable
    prefs: tuple  # ranked (h or None, h or None) pairs, best first


@dataclass(frozen=True)
class CouplesMarket:
    singles: Mapping[Hashable, tuple]  # single doctor -> ranked hospitals
    couples: Mapping[Hashable, Couple]
    capacity: Mapping[Hashable, int]
    ranking: Mapping[Hashable, tuple]  # hospital -> ranked doctors

    def __init__(self, singles: Mapping, couples: Mapping, hospitals: Mapping):
        """``couples`` maps a couple id to ``((d1, d2), pairs)``; ``hospitals``
        maps a hospital id to ``(capacity, ranked doctors)``."""
        object.__setattr__(self, "singles", {d: tuple(p) for d, p in singles.items()})
        cs = {}
        for cid, ((d1, d2), prefs) in couples.items():
            prefs = [tuple(p) for p in prefs]
            if not validate_downward_closed(prefs):
                raise CouplesError(f"preferences of couple {cid} are not downward closed")
            cs[cid] = Couple(d1, d2, _normalize(prefs))
        object.__setattr__(self, "couples", cs)
        object.__setattr__(self, "capacity", {h: int(k) for h, (k, _) in hospitals.items()})
        object.__setattr__(self, "ranking", {h: tuple(r) for h, (_, r) in hospitals.items()})
        self._validate()

    def _validate(self) -> None:
        docs = self.doctors
        if len(set(docs)) != len(docs):
            raise CouplesError("doctor ids are not unique")
        hs = set(self.capacity)
        for h, k in self.capacity.items():
            if k < 0:
                raise CouplesError(f"negative capacity at {h}")
        for h, r in self.ranking.items():
            if len(set(r)) != len(r) or not set(r) <= set(docs):
                raise CouplesError(f"bad ranking at hospital {h}")
            if len(r) > MAX_RANKED:
                raise CouplesError(f"hospital {h} ranks more than {MAX_RANKED} doctors")
        for d, p in self.singles.items():
            if len(set(p)) != len(p) or not set(p) <= hs:
                raise CouplesError(f"bad preference list for {d}")
        for cid, c in self.couples.items():
            if len(set(c.prefs)) != len(c.prefs):
                raise CouplesError(f"duplicate pair in preferences of couple {cid}")
            for a, b in c.prefs:
                if (a, b) == (None, None) or any(x is not None and x not in hs for x in (a, b)):
                    raise CouplesError(f"bad pair ({a}, {b}) for couple {cid}")

    @property
    def doctors(self) -> list:
        out = list(self.singles)
        for c in self.couples.values():
            out += [c.first, c.second]
        return out

    @property
    def hospitals(self) -> list:
        return list(self.capacity)

    def couple_of(self, d: Hashable) -> tuple[Hashable, Couple] | None:
        for cid, c in self.couples.items():
            if d in (c.first, c.second):
                return cid, c
        return None

    def hrank(self, h: Hashable, d: Hashable) -> int | None:
        r = self.ranking[h]
        return r.index(d) if d in r else None

    def quota_range(self, h: Hashable) -> list[int]:
        k = self.capacity[h]
        return list(range(max(0, k - 2), k + 3))

    def h_prefers(self, h: Hashable, a: Hashable, b: Hashable) -> bool:
        ra, rb = self.hrank(h, a), self.hrank(h, b)
        return ra is not None and (rb is None or ra < rb)


def _normalize(prefs: list[tuple]) -> tuple:
    pos = {p: i for i, p in enumerate(prefs)}
    out = []
    for a, b in prefs:
        if a is not None and b is not None:
            i = pos[(a, b)]
            if pos.get((a, None), i + 1) < i or pos.get((None, b), i + 1) < i:
                continue
        out.append((a, b))
    return tuple(out)


def m(d: Hashable, h: Hashable | None) -> Formula:
    return Atom(("matched", d, h))


def quota(h: Hashable, q: int) -> Formula:
    return Atom(("quota", h, q))


def _pair_holds(c: Couple, pair: tuple) -> Formula:
    a, b = pair
    return And(m(c.first, a), m(c.second, b))


def _full(h: Hashable, docs: Sequence) -> Formula:
    return And([m(d, h) for d in docs]) if docs else None


def _subset_disjuncts(h: Hashable, pool: Sequence, size: int) -> list[Formula] | None:
    """Disjuncts "all of these ``size`` doctors are at h"; None means TRUE."""
    if size < 0:
        return []
    if size == 0:
        return None
    return [And([m(d, h) for d in sub]) for sub in combinations(pool, size)]


def _block_formula(antecedent: Formula, disjuncts: list[Formula], extra: list[list[Formula] | None]) -> Formula | None:
    ds = list(disjuncts)
    for e in extra:
        if e is None:
            return None  # vacuous: an empty conjunction is in the disjunction
        ds += e
    return implies_any(antecedent, ds)


def encode_couples(mkt: CouplesMarket) -> list[Formula]:
    fs: list[Formula] = []
    H = mkt.hospitals
    D = mkt.doctors
    # 1-2: adjusted capacities
    for h in H:
        qs = [quota(h, q) for q in mkt.quota_range(h)]
        fs.append(Or(qs))
        fs += at_most_one(qs)
    # 3: at most one hospital per doctor
    for d in D:
        fs += at_most_one([m(d, h) for h in H])
    # 4: capacity respect, over subsets of ranked doctors
    for h in H:
        for q in mkt.quota_range(h):
            for sub in combinations(mkt.ranking[h], q + 1):
                fs.append(Not(And([quota(h, q)] + [m(d, h) for d in sub])))
    # 5: individual rationality units
    for d in D:
        cp = mkt.couple_of(d)
        for h in H:
            bad = mkt.hrank(h, d) is None
            if cp is None:
                bad = bad or h not in mkt.singles[d]
            else:
                _, c = cp
                idx = 0 if d == c.first else 1
                bad = bad or not any(p[idx] == h for p in c.prefs)
            if bad:
                fs.append(Not(m(d, h)))
    # 6: unranked pairs of actual hospitals
    for c in mkt.couples.values():
        ranked = set(c.prefs)
        for h in H:
            for h2 in H:
                if (h, h2) not in ranked:
                    fs.append(Not(And(m(c.first, h), m(c.second, h2))))
    # 7a/7b: the "partner unmatched" shorthand, plus its closure 7c
    for c in mkt.couples.values():
        for idx, (me, other) in enumerate(((c.first, c.second), (c.second, c.first))):
            for h in H:
                single = (h, None) if idx == 0 else (None, h)
                if single not in c.prefs:
                    continue
                partners = [p[1 - idx] for p in c.prefs if p[idx] == h and p[1 - idx] is not None]
                rhs = Not(Or([m(other, x) for x in partners])) if partners else None
                if rhs is None:
                    fs.append(Implies(m(me, h), m(other, None)))
                else:
                    fs.append(Implies(m(me, h), Iff(m(other, None), rhs)))
            # 7c: "other unmatched while me matched" requires me to be matched
            mine = sorted({p[idx] for p in c.prefs if p[idx] is not None}, key=H.index)
            fs.append(implies_any(m(other, None), [m(me, h) for h in mine]))
    # 8: single doctor blocks
    for d, plist in mkt.singles.items():
        for h in plist:
            if mkt.hrank(h, d) is None:
                continue
            better_h = plist[: plist.index(h)]
            better_d = mkt.ranking[h][: mkt.hrank(h, d)]
            for q in mkt.quota_range(h):
                f = _block_formula(
                    And(quota(h, q), Not(m(d, h))),
                    [m(d, x) for x in better_h],
                    [_subset_disjuncts(h, better_d, q)],
                )
                if f is not None:
                    fs.append(f)
    # 9, 9a, 9b, 10: couple blocks
    for c in mkt.couples.values():
        for i, (a, b) in enumerate(c.prefs):
            better = [_pair_holds(c, p) for p in c.prefs[:i]]
            if a is not None and b is not None and a != b:
                if mkt.hrank(a, c.first) is None or mkt.hrank(b, c.second) is None:
                    continue
                pool_a = mkt.ranking[a][: mkt.hrank(a, c.first)]
                pool_b = mkt.ranking[b][: mkt.hrank(b, c.second)]
                for q in mkt.quota_range(a):
                    for q2 in mkt.quota_range(b):
                        f = _block_formula(
                            And(quota(a, q), quota(b, q2), Not(_pair_holds(c, (a, b)))),
                            better,
                            [_subset_disjuncts(a, pool_a, q), _subset_disjuncts(b, pool_b, q2)],
                        )
                        if f is not None:
                            fs.append(f)
            elif a is not None and b is None or a is None and b is not None:
                h, member = (a, c.first) if a is not None else (b, c.second)
                if mkt.hrank(h, member) is None:
                    continue
                pool = mkt.ranking[h][: mkt.hrank(h, member)]
                for q in mkt.quota_range(h):
                    f = _block_formula(
                        And(quota(h, q), Not(_pair_holds(c, (a, b)))),
                        better,
                        [_subset_disjuncts(h, pool, q)],
                    )
                    if f is not None:
                        fs.append(f)
            elif a == b:
                h = a
                if mkt.hrank(h, c.first) is None or mkt.hrank(h, c.second) is None:
                    continue
                worse = max(mkt.hrank(h, c.first), mkt.hrank(h, c.second))
                pool = [x for x in mkt.ranking[h][:worse] if x not in (c.first, c.second)]
                for q in mkt.quota_range(h):
                    if q < 2:
                        continue  # h can never take both members
                    f = _block_formula(
                        And(quota(h, q), Not(_pair_holds(c, (h, h)))),
                        better,
                        [_subset_disjuncts(h, pool, q - 1)],
                    )
                    if f is not None:
                        fs.append(f)
    return fs


@dataclass(frozen=True)
class PerturbedOutcome:
    assignment: Mapping[Hashable, Hashable | None]
    kstar: Mapping[Hashable, int]

    def deviation(self, mkt: CouplesMarket) -> int:
        return sum(abs(mkt.capacity[h] - self.kstar[h]) for h in mkt.hospitals)


def outcome_labels(mkt: CouplesMarket) -> list[tuple]:
    labels = [("matched", d, h) for d in mkt.doctors for h in mkt.hospitals]
    labels += [("quota", h, q) for h in mkt.hospitals for q in mkt.quota_range(h)]
    return labels


def decode_outcome(model: Mapping, mkt: CouplesMarket) -> PerturbedOutcome:
    assign = {}
    for d in mkt.doctors:
        hs = [h for h in mkt.hospitals if model.get(("matched", d, h), False)]
        assign[d] = hs[0] if hs else None
    kstar = {h: next(q for q in mkt.quota_range(h) if model.get(("quota", h, q), False)) for h in mkt.hospitals}
    return PerturbedOutcome(assign, kstar)


def solve_couples(mkt: CouplesMarket, limit: int | None = 1) -> list[PerturbedOutcome]:
    fs = encode_couples(mkt)
    if not fs:
        return [PerturbedOutcome({}, {})]
    cs = to_cnf(fs)
    labels = [lab for lab in outcome_labels(mkt) if lab in cs]
    return [decode_outcome(mod, mkt) for mod in enumerate_models(cs, labels, limit)]


def _couple_pair(c: Couple, assign: Mapping) -> tuple:
    return assign.get(c.first), assign.get(c.second)


def is_stable_with_couples(mkt: CouplesMarket, out: PerturbedOutcome) -> tuple[bool, list[tuple]]:
    """Individual rationality and the three blocking types, w.r.t. ``out.kstar``."""
    assign, kstar = out.assignment, out.kstar
    if set(assign) != set(mkt.doctors) or set(kstar) != set(mkt.hospitals):
        raise CouplesError("outcome does not cover the market")
    for h, q in kstar.items():
        if q not in mkt.quota_range(h):
            raise CouplesError(f"kstar of {h} outside the allowed range")
    for d, h in assign.items():
        if h is not None and h not in mkt.capacity:
            raise CouplesError(f"unknown hospital {h}")
    load = {h: [d for d in mkt.doctors if assign[d] == h] for h in mkt.hospitals}
    viol: list[tuple] = []
    for d, h in assign.items():
        if h is not None and mkt.hrank(h, d) is None:
            viol.append(("unranked", d, h))
    for d, p in mkt.singles.items():
        if assign[d] is not None and assign[d] not in p:
            viol.append(("unacceptable", d, assign[d]))
    for cid, c in mkt.couples.items():
        pair = _couple_pair(c, assign)
        if pair != (None, None) and pair not in c.prefs:
            viol.append(("unacceptable", cid, pair))
    for h in mkt.hospitals:
        if len(load[h]) > kstar[h]:
            viol.append(("over_capacity", h, len(load[h])))

    def better_count(h, d, exclude=()):
        return sum(1 for x in load[h] if x not in exclude and mkt.h_prefers(h, x, d))

    def accepts(h, d):
        return mkt.hrank(h, d) is not None and better_count(h, d) < kstar[h]

    for d, p in mkt.singles.items():
        cur = assign[d]
        for h in p[: p.index(cur) if cur in p else len(p)]:
            if accepts(h, d):
                viol.append(("block_single", d, h))
    for cid, c in mkt.couples.items():
        cur = _couple_pair(c, assign)
        stop = c.prefs.index(cur) if cur in c.prefs else len(c.prefs)
        for a, b in c.prefs[:stop]:
            if a is not None and a == b:
                if mkt.hrank(a, c.first) is None or mkt.hrank(a, c.second) is None:
                    continue
                w = c.first if mkt.h_prefers(a, c.second, c.first) else c.second
                if better_count(a, w, exclude=(c.first, c.second)) <= kstar[a] - 2:
                    viol.append(("block_couple_same", cid, a))
            else:
                if a is not None and not accepts(a, c.first):
                    continue
                if b is not None and not accepts(b, c.second):
                    continue
                viol.append(("block_couple_pair", cid, (a, b)))
    return not viol, viol


def _options(mkt: CouplesMarket) -> list[tuple[list, list]]:
    """Per unit (single or couple): doctors and individually rational placements."""
    units = []
    for d, p in mkt.singles.items():
        units.append(([d], [(None,)] + [(h,) for h in p if mkt.hrank(h, d) is not None]))
    for c in mkt.couples.values():
        opts = [(None, None)]
        for a, b in c.prefs:
            if (a is None or mkt.hrank(a, c.first) is not None) and (b is None or mkt.hrank(b, c.second) is not None):
                opts.append((a, b))
        units.append(([c.first, c.second], opts))
    return units


def bruteforce_near_feasible(
    mkt: CouplesMarket, aggregate: bool = False, max_doctors: int = 8, max_hospitals: int = 4
) -> PerturbedOutcome | None:
    """Exhaustive search for a stable outcome with minimal total capacity deviation.

    With ``aggregate`` the adjusted capacities must also satisfy
    ``sum(k) <= sum(kstar) <= sum(k) + 4``.
    """
    if len(mkt.doctors) > max_doctors or len(mkt.hospitals) > max_hospitals:
        raise CouplesError("instance exceeds the brute-force bounds")
    H = mkt.hospitals
    ktot = sum(mkt.capacity.values())
    kvecs = [dict(zip(H, ks)) for ks in product(*(mkt.quota_range(h) for h in H))]
    if aggregate:
        kvecs = [kv for kv in kvecs if ktot <= sum(kv.values()) <= ktot + 4]
    kvecs.sort(key=lambda kv: (sum(abs(kv[h] - mkt.capacity[h]) for h in H), [kv[h] for h in H]))
    units = _options(mkt)
    assignments = []
    for choice in product(*(opts for _, opts in units)):
        assign = {}
        for (docs, _), placement in zip(units, choice):
            assign.update(zip(docs, placement))
        assignments.append(assign)
    for kv in kvecs:
        for assign in assignments:
            out = PerturbedOutcome(assign, kv)
            if is_stable_with_couples(mkt, out)[0]:
                return out
    return None
