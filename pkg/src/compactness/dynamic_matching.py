"""Dynamic one-to-one matching with tenure.

Men arrive and depart (present at integer times ``a <= t < d``); women are
always present.  A chronology assigns each woman at each time a present man
or nobody.  Variables are ``("matched", m, w, t)``.

Markets may be infinite: men are then produced by a callback returning the
men present at some time in a closed range, and a woman's preference is a
rank function (lower is better, ``None`` unacceptable).  Only the men
relevant to a window are ever materialized.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Hashable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from itertools import count, islice

from .logic import And, Atom, Formula, Not, Or, at_most_one, enumerate_models, implies_any, to_cnf
from .matching import MarriageMarket, gale_shapley

PRESENCE_BUDGET = 1000


class ChronologyError(ValueError):
    pass


class FinitePresenceError(ValueError):
    pass


class UnboundedBelow(ValueError):
    pass


@dataclass(frozen=True)
class Man:
    name: Hashable
    prefs: tuple  # women, best first
    arrival: int
    departure: int

    def __post_init__(self):
        if not self.arrival < self.departure:
            raise ValueError(f"{self.name}: arrival must precede departure")

    def present(self, t: int) -> bool:
        return self.arrival <= t < self.departure


RankFn = Callable[[Man], "int | None"]


class DynamicMarket:
    """Men with presence intervals and preferences; women with rankings of men."""

    def __init__(
        self,
        men: Iterable[Man] | Callable[[int, int], Iterable[Man]],
        women: Mapping[Hashable, Sequence[Hashable] | RankFn],
        min_arrival: int | None = None,
        overlap: Callable[[int], float] | None = None,
        name: str = "market",
    ):
        self.women = tuple(women)
        self._wprefs = dict(women)
        self.name = name
        self._overlap = overlap
        self._cache: dict = {}
        if callable(men):
            self._source = men
            self.finite = False
            self.min_arrival = min_arrival
        else:
            men = list(men)
            names = [m.name for m in men]
            if len(set(names)) != len(names):
                raise ValueError("duplicate man")
            self._source = None
            self.finite = True
            self._men = {m.name: m for m in men}
            self._cache.update(self._men)
            self.min_arrival = min((m.arrival for m in men), default=0)
        for m in (self._men.values() if self.finite else ()):
            self._check_man(m)

    def _check_man(self, m: Man) -> None:
        for w in m.prefs:
            if w not in self._wprefs:
                raise ValueError(f"{m.name} lists unknown woman {w}")

    def men_between(self, lo: int, hi: int, budget: int | None = PRESENCE_BUDGET) -> list[Man]:
        """Men present at some time in ``[lo, hi]``, ordered by arrival then name."""
        if self.finite:
            out = [m for m in self._men.values() if m.arrival <= hi and m.departure > lo]
        else:
            it = iter(self._source(lo, hi))
            out = list(islice(it, budget + 1)) if budget is not None else list(it)
            if budget is not None and len(out) > budget:
                raise FinitePresenceError(f"more than {budget} men present in [{lo}, {hi}]")
            for m in out:
                if m.name not in self._cache:
                    self._check_man(m)
                    self._cache[m.name] = m
        return sorted(out, key=lambda m: (m.arrival, str(m.name)))

    def present(self, t: int) -> list[Man]:
        return [m for m in self.men_between(t, t) if m.present(t)]

    def man(self, name) -> Man:
        return self._cache[name]

    def woman_rank(self, w, m: Man):
        p = self._wprefs[w]
        if callable(p):
            return p(m)
        try:
            return list(p).index(m.name)
        except ValueError:
            return None

    def woman_prefers(self, w, a: Man, b: Man | None) -> bool:
        ra = self.woman_rank(w, a)
        if ra is None:
            return False
        if b is None:
            return True
        rb = self.woman_rank(w, b)
        return rb is None or ra < rb

    @staticmethod
    def man_prefers(m: Man, a, b) -> bool:
        if a not in m.prefs:
            return False
        return b is None or b not in m.prefs or m.prefs.index(a) < m.prefs.index(b)

    def mutually_acceptable(self, m: Man, w) -> bool:
        return w in m.prefs and self.woman_rank(w, m) is not None

    def restrict_arrivals(self, lo: int) -> DynamicMarket:
        """The sub-market of men arriving at ``lo`` or later."""
        if self.finite:
            return DynamicMarket([m for m in self._men.values() if m.arrival >= lo], self._wprefs, name=self.name)
        src = self._source
        return DynamicMarket(
            lambda a, b: (m for m in src(max(a, lo), b) if m.arrival >= lo), self._wprefs, min_arrival=lo, name=self.name
        )

    def overlap_count(self, t: int, budget: int = PRESENCE_BUDGET) -> float:
        """Number of men present at both ``t`` and ``t+1`` (``inf`` if declared infinite)."""
        if self._overlap is not None:
            return self._overlap(t)
        return sum(1 for m in self.men_between(t, t + 1, budget) if m.present(t) and m.present(t + 1))


@dataclass
class Chronology:
    window: tuple[int, int]
    assign: dict = field(default_factory=dict)  # (woman, t) -> man name or None

    def partner_of_woman(self, w, t):
        return self.assign.get((w, t))

    def partner_of_man(self, m, t):
        for (w, s), x in self.assign.items():
            if s == t and x == m:
                return w
        return None

    def restrict(self, lo: int, hi: int) -> Chronology:
        return Chronology((lo, hi), {k: v for k, v in self.assign.items() if lo <= k[1] <= hi})


def check_finite_presence(mkt: DynamicMarket, window: tuple[int, int], budget: int = PRESENCE_BUDGET):
    """``(True, None)``, ``(False, t)`` for the first infinite overlap, or ``(None, t)`` if over budget."""
    lo, hi = window
    for t in range(lo, hi):
        try:
            c = mkt.overlap_count(t, budget)
        except FinitePresenceError:
            return None, t
        if c == math.inf:
            return False, t
        if c > budget:
            return None, t
    return True, None


def is_stable_subject_to_tenure(
    mkt: DynamicMarket, ch: Chronology, boundary: str = "open"
) -> tuple[bool, list[tuple]]:
    """Tenure and no unprotected blocking pair within the chronology's window.

    At the first period the previous matching is unknown.  With ``"open"``
    a partner who was already on the market is given the benefit of the doubt
    (he may be an incumbent); with ``"closed"`` nobody is an incumbent there.
    """
    lo, hi = ch.window
    known = {m.name: m for m in mkt.men_between(lo, hi)}
    viol: list[tuple] = []
    partner: dict = {}
    for (w, t), name in ch.assign.items():
        if name is None:
            continue
        if not lo <= t <= hi or w not in mkt.women:
            raise ChronologyError(f"entry ({w}, {t}) outside the window or unknown woman")
        if name not in known:
            raise ChronologyError(f"unknown man {name} or not on the market in the window")
        m = known[name]
        if not m.present(t):
            raise ChronologyError(f"{name} is not on the market at {t}")
        if (name, t) in partner:
            raise ChronologyError(f"{name} matched twice at {t}")
        partner[(name, t)] = w
        if not mkt.mutually_acceptable(m, w):
            viol.append(("unacceptable", name, w, t))
    for t in range(lo, hi):
        for m in mkt.present(t):
            if m.present(t + 1):
                before, after = partner.get((m.name, t)), partner.get((m.name, t + 1))
                if before is not None and after != before and not mkt.man_prefers(m, after, before):
                    viol.append(("tenure", m.name, t + 1))
    for t in range(lo, hi + 1):
        for m in mkt.present(t):
            mine = partner.get((m.name, t))
            for w in mkt.women:
                if w == mine or not mkt.mutually_acceptable(m, w) or not mkt.man_prefers(m, w, mine):
                    continue
                cur = ch.assign.get((w, t))
                cur_man = known[cur] if cur is not None else None
                if not mkt.woman_prefers(w, m, cur_man):
                    continue
                if cur is not None:
                    if t > lo and ch.assign.get((w, t - 1)) == cur:
                        continue
                    if t == lo and boundary == "open" and cur_man.present(t - 1):
                        continue
                viol.append(("blocking", m.name, w, t))
    return not viol, viol


def pereyra_forward(mkt: DynamicMarket, T0: int | None = None, T1: int | None = None) -> Chronology:
    """Period-by-period man-optimal matching, each incumbent promoted to the top of his partner's list."""
    T0 = mkt.min_arrival if T0 is None else T0
    if T0 is None:
        raise UnboundedBelow("arrival times are not bounded below")
    if any(m.present(T0 - 1) for m in mkt.men_between(T0 - 1, T0 - 1)):
        raise UnboundedBelow(f"men are on the market before {T0}")
    if T1 is None:
        if not mkt.finite:
            raise ValueError("an infinite market needs an explicit horizon")
        T1 = max((m.departure - 1 for m in mkt.men_between(T0, 10**9, None)), default=T0)
    ch = Chronology((T0, T1))
    prev: dict = {}  # woman -> man name at t-1
    for t in range(T0, T1 + 1):
        here = mkt.present(t)
        names = {m.name for m in here}
        men_prefs = {m.name: [w for w in m.prefs] for m in here}
        women_prefs = {}
        for w in mkt.women:
            ranked = sorted((m for m in here if mkt.woman_rank(w, m) is not None), key=lambda m: (mkt.woman_rank(w, m), str(m.name)))
            lst = [m.name for m in ranked]
            inc = prev.get(w)
            if inc in names and inc in lst:
                lst.remove(inc)
                lst.insert(0, inc)
            women_prefs[w] = lst
        mu = gale_shapley(MarriageMarket(men_prefs, women_prefs), "men")
        now = {w: m for m, w in mu}
        for w in mkt.women:
            ch.assign[(w, t)] = now.get(w)
        prev = now
    return ch


def tmatched(m, w, t: int) -> Formula:
    return Atom(("matched", m, w, t))


def period_formulas(mkt: DynamicMarket, t: int, men: Sequence[Man]) -> list[Formula]:
    """At-most-one partner at ``t`` and no match for off-market or unacceptable pairs."""
    fs: list[Formula] = []
    for m in men:
        fs += at_most_one([tmatched(m.name, w, t) for w in mkt.women])
    for w in mkt.women:
        fs += at_most_one([tmatched(m.name, w, t) for m in men])
    for m in men:
        for w in mkt.women:
            if not m.present(t) or not mkt.mutually_acceptable(m, w):
                fs.append(Not(tmatched(m.name, w, t)))
    return fs


def no_blocking_formulas(mkt: DynamicMarket, t: int, men: Sequence[Man], has_prev: bool) -> list[Formula]:
    """Every acceptable pair present at ``t`` is matched or blocked by a better or tenured partner.

    With ``has_prev`` the formulas look back to ``t - 1`` for incumbents.
    """
    fs: list[Formula] = []
    here = [m for m in men if m.present(t)]
    stay = [m for m in here if m.present(t - 1)] if has_prev else []
    for w in mkt.women:
        for m in here:
            if not mkt.mutually_acceptable(m, w):
                continue
            better_w = [tmatched(m.name, v, t) for v in m.prefs[: m.prefs.index(w)]]
            better_m = [tmatched(x.name, w, t) for x in here if x is not m and mkt.woman_prefers(w, x, m)]
            branches = list(better_w)
            if better_m:
                newer = Or(better_m) if len(better_m) > 1 else better_m[0]
                if has_prev and m.present(t - 1):
                    branches.append(And(newer, Not(tmatched(m.name, w, t - 1))))
                else:
                    branches.append(newer)
            branches += [And(tmatched(x.name, w, t), tmatched(x.name, w, t - 1)) for x in stay]
            fs.append(implies_any(Not(tmatched(m.name, w, t)), branches))
    return fs


def encode_dynamic_window(mkt: DynamicMarket, window: tuple[int, int], boundary: str = "open") -> list[Formula]:
    """At-most-one, off-market and no-blocking formulas for times in ``window``.

    ``"open"`` adds the period just before the window with the first three
    formula types only, so the window's first period may inherit incumbents;
    ``"closed"`` treats the first period as having none.
    """
    lo, hi = window
    if boundary not in ("open", "closed"):
        raise ValueError("boundary must be 'open' or 'closed'")
    ok, bad = check_finite_presence(mkt, (lo - 1, hi))
    if ok is not True:
        raise FinitePresenceError(f"finite presence fails or is unknown at time {bad}")
    first = lo - 1 if boundary == "open" else lo
    men = mkt.men_between(first, hi)
    fs: list[Formula] = []
    for t in range(first, hi + 1):
        fs += period_formulas(mkt, t, men)
    for t in range(lo, hi + 1):
        fs += no_blocking_formulas(mkt, t, men, t - 1 >= first)
    return fs


def window_labels(mkt: DynamicMarket, window: tuple[int, int]) -> list[tuple]:
    lo, hi = window
    return [
        ("matched", m.name, w, t)
        for t in range(lo, hi + 1)
        for m in mkt.men_between(lo, hi)
        for w in mkt.women
    ]


def decode_chronology(model: Mapping, mkt: DynamicMarket, window: tuple[int, int]) -> Chronology:
    lo, hi = window
    ch = Chronology(window)
    men = mkt.men_between(lo, hi)
    for t in range(lo, hi + 1):
        for w in mkt.women:
            ch.assign[(w, t)] = next((m.name for m in men if model.get(("matched", m.name, w, t))), None)
    return ch


def window_chronologies(mkt: DynamicMarket, window: tuple[int, int], boundary: str = "open", limit: int | None = None) -> list[Chronology]:
    """All chronologies on the window admitted by the encoding (projected onto the window)."""
    cs = to_cnf(encode_dynamic_window(mkt, window, boundary))
    labels = [lab for lab in window_labels(mkt, window) if lab in cs]
    return [decode_chronology(m, mkt, window) for m in enumerate_models(cs, project=labels, limit=limit)]


# --- built-in families -------------------------------------------------------


def parity_line() -> DynamicMarket:
    """One woman and a man ``m<t>`` for every integer ``t``, present at ``t`` and ``t+1``.

    The woman prefers later arrivals; under that ranking exactly two
    chronologies are stable subject to tenure, one matching every man with an
    even arrival time and one matching every odd one.
    """

    def source(lo: int, hi: int) -> Iterator[Man]:
        for t in range(lo - 1, hi + 1):
            yield Man(f"m{t}", ("w",), t, t + 2)

    return DynamicMarket(source, {"w": lambda m: -m.arrival}, min_arrival=None, overlap=lambda t: 1, name="parity_line")


def no_finite_presence(T: int | None = None) -> DynamicMarket:
    """One woman and men ``m<k>`` (``k >= 1``) present from ``-k`` to ``-1``.

    Every man is on the market at times -2 and -1, so finite presence fails.
    ``T`` truncates to ``k <= T``; the woman ranks men by index.
    """

    def source(lo: int, hi: int) -> Iterator[Man]:
        if lo > -1:
            return
        ks = count(max(1, -hi)) if T is None else range(max(1, -hi), T + 1)
        for k in ks:
            yield Man(f"m{k}", ("w",), -k, 0)

    def overlap(t: int) -> float:
        if t >= -1:
            return 0
        return math.inf if T is None else max(0, T - max(1, -t) + 1)

    return DynamicMarket(
        source, {"w": lambda m: int(str(m.name)[1:])}, min_arrival=None if T is None else -T, overlap=overlap, name="no_finite_presence"
    )


def partners_at(mkt: DynamicMarket, window: tuple[int, int], t: int, w, boundary: str = "closed") -> set:
    """Possible partners of ``w`` at ``t`` across all window chronologies."""
    return {ch.partner_of_woman(w, t) for ch in window_chronologies(mkt, window, boundary)}
