"""Trading networks with quasilinear utilities and grid-price equilibria.

Each trade moves one object from its seller to its buyer, and objects and
trades are identified.  An agent's utility is a table over the sets of
objects it holds afterwards (a subset of ``O_i``); holding exactly its
endowment is worth 0, and ``None`` marks an impossible holding (minus
infinity).  Payoff at prices ``p`` adds the price of every object sold away
and subtracts the price of every object bought.

The grid encoding uses variables ``("price", o, p)`` and ``("consumes", i, o)``.
"""

from __future__ import annotations

from collections.abc import Callable, Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from itertools import chain, combinations, product
from math import floor

from .logic import And, Atom, Formula, Iff, Implies, Not, Or, Solver, at_most_one, to_cnf
from .lp import linprog_exact

MAX_OBJECTS_PER_AGENT = 3
MAX_PRICE_BOUND = 16

Bundle = frozenset


class NetworkError(ValueError):
    pass


class NonConvergence(RuntimeError):
    pass


def subsets(xs: Sequence) -> list[frozenset]:
    return [frozenset(c) for c in chain.from_iterable(combinations(xs, r) for r in range(len(xs) + 1))]


def _value(v):
    if v is None or (isinstance(v, str) and v.strip() in ("-inf", "-infinity")):
        return None
    if isinstance(v, float):
        if v == float("-inf"):
            return None
        raise TypeError("utilities must be exact rationals")
    return Fraction(v)


@dataclass(frozen=True)
class Trade:
    obj: Hashable
    seller: Hashable
    buyer: Hashable


class TradingNetwork:
    def __init__(
        self,
        trades: Iterable[tuple[Hashable, Hashable, Hashable]],
        utilities: Mapping[Hashable, Mapping | Callable],
        agents: Iterable[Hashable] | None = None,
    ):
        self.trades = tuple(Trade(*t) for t in trades)
        objs = [t.obj for t in self.trades]
        if len(set(objs)) != len(objs):
            raise NetworkError("objects and trades must correspond one to one")
        self.objects = tuple(objs)
        self.trade = {t.obj: t for t in self.trades}
        found: list = list(agents) if agents is not None else []
        for t in self.trades:
            if t.seller == t.buyer:
                raise NetworkError(f"trade {t.obj} has the same seller and buyer")
            for a in (t.seller, t.buyer):
                if a not in found:
                    found.append(a)
        self.agents = tuple(found)
        self.objects_of = {i: tuple(o for o in self.objects if i in (self.trade[o].seller, self.trade[o].buyer)) for i in self.agents}
        self.utility: dict = {}
        for i in self.agents:
            Oi = self.objects_of[i]
            spec = utilities.get(i, {}) if Oi else {}
            table = {}
            for X in subsets(Oi):
                if callable(spec):
                    table[X] = _value(spec(X))
                else:
                    key = X if X in spec else _bundle_key(X)
                    if key not in spec:
                        raise NetworkError(f"utility of {i} misses bundle {sorted(map(str, X))}")
                    table[X] = _value(spec[key])
            if Oi and table[self.endowment(i)] != 0:
                raise NetworkError(f"utility of {i} at its endowment must be 0")
            self.utility[i] = table

    def endowment(self, i) -> frozenset:
        return frozenset(o for o in self.objects_of[i] if self.trade[o].seller == i)

    def transfer(self, i, X: frozenset, prices: Mapping) -> Fraction:
        """Net money received by ``i`` when ending up holding ``X``."""
        total = Fraction(0)
        for o in self.objects_of[i]:
            t = self.trade[o]
            if t.buyer == i and o in X:
                total -= prices[o]
            elif t.seller == i and o not in X:
                total += prices[o]
        return total

    def payoff(self, i, X: frozenset, prices: Mapping) -> Fraction | None:
        u = self.utility[i][X]
        return None if u is None else u + self.transfer(i, X, prices)


def _bundle_key(X: Iterable) -> str:
    return ",".join(sorted(map(str, X)))


def demand(net: TradingNetwork, i, prices: Mapping, eps: Fraction = Fraction(0)) -> list[frozenset]:
    """Bundles of ``i`` whose payoff is within ``eps`` of the best."""
    pays = [(X, net.payoff(i, X, prices)) for X in subsets(net.objects_of[i])]
    pays = [(X, v) for X, v in pays if v is not None]
    if not pays:
        return []
    best = max(v for _, v in pays)
    return [X for X, v in pays if v >= best - eps]


def compute_price_bound(net: TradingNetwork, o) -> int:
    """Smallest positive integer above every finite marginal value of ``o`` to either party."""
    t = net.trade[o]
    span = Fraction(0)
    for i in (t.seller, t.buyer):
        table = net.utility[i]
        for X in subsets([x for x in net.objects_of[i] if x != o]):
            a, b = table[X | {o}], table[X]
            if a is not None and b is not None:
                span = max(span, abs(a - b))
    return floor(span) + 1


@dataclass(frozen=True)
class PriceGrid:
    n: int
    bounds: dict  # object -> H_o

    def prices(self, o) -> list[Fraction]:
        H = self.bounds[o]
        return [Fraction(k, self.n) for k in range(-H * self.n, H * self.n + 1)]

    def contains(self, o, p) -> bool:
        p = Fraction(p)
        return abs(p) <= self.bounds[o] and (p * self.n).denominator == 1


def make_grid(net: TradingNetwork, n: int, check_caps: bool = True) -> PriceGrid:
    grid = PriceGrid(n, {o: compute_price_bound(net, o) for o in net.objects})
    if check_caps:
        _check_caps(net, grid)
    return grid


def _check_caps(net: TradingNetwork, grid: PriceGrid) -> None:
    for i in net.agents:
        if len(net.objects_of[i]) > MAX_OBJECTS_PER_AGENT:
            raise NetworkError(f"agent {i} trades {len(net.objects_of[i])} objects; the cap is {MAX_OBJECTS_PER_AGENT}")
    for o, H in grid.bounds.items():
        if H > MAX_PRICE_BOUND:
            raise NetworkError(f"price bound {H} for {o} exceeds {MAX_PRICE_BOUND}")


def check_substitutable(net: TradingNetwork, i, grid: Mapping | Sequence | None = None) -> tuple[bool, tuple | None]:
    """Test substitutability of ``i`` on every ordered pair of grid price vectors.

    ``grid`` maps each object of ``i`` to candidate prices (a single list is
    used for every object); the default is the integers in ``[-H_o, H_o]``.
    Passing only certifies the tested grid.
    """
    Oi = net.objects_of[i]
    if grid is None:
        axes = [[Fraction(k) for k in range(-compute_price_bound(net, o), compute_price_bound(net, o) + 1)] for o in Oi]
    elif isinstance(grid, Mapping):
        axes = [[Fraction(v) for v in grid[o]] for o in Oi]
    else:
        axes = [[Fraction(v) for v in grid] for _ in Oi]
    single = []
    for vec in product(*axes):
        prices = dict(zip(Oi, vec))
        D = demand(net, i, prices)
        if len(D) == 1:
            single.append((vec, D[0]))
    for p, Dp in single:
        for q, Dq in single:
            if p == q or any(a > b for a, b in zip(p, q)):
                continue
            for k, o in enumerate(Oi):
                if p[k] == q[k] and o in Dp and o not in Dq:
                    return False, (dict(zip(Oi, p)), dict(zip(Oi, q)), o)
    return True, None


def price_atom(o, p: Fraction) -> Formula:
    return Atom(("price", o, p))


def consumes(i, o) -> Formula:
    return Atom(("consumes", i, o))


def encode_eps_walrasian(net: TradingNetwork, grid: PriceGrid, check_caps: bool = True) -> list[Formula]:
    """Formulas whose models are the ``(|O_i|/n)``-Walrasian outcomes with grid prices."""
    for o in net.objects:
        if grid.bounds.get(o, 0) < compute_price_bound(net, o):
            raise NetworkError(f"grid bound for {o} is below the required price bound")
    if check_caps:
        _check_caps(net, grid)
    fs: list[Formula] = []
    P = {o: [price_atom(o, p) for p in grid.prices(o)] for o in net.objects}
    for o in net.objects:
        fs.append(Or(P[o]))
        fs += at_most_one(P[o])
    for o in net.objects:
        t = net.trade[o]
        fs.append(Iff(consumes(t.buyer, o), Not(consumes(t.seller, o))))
    for i in net.agents:
        Oi = net.objects_of[i]
        if not Oi:
            continue
        eps = Fraction(len(Oi), grid.n)
        holdings = {X: And([consumes(i, o) if o in X else Not(consumes(i, o)) for o in Oi]) for X in subsets(Oi)}
        for vec in product(*(grid.prices(o) for o in Oi)):
            prices = dict(zip(Oi, vec))
            D = demand(net, i, prices, eps)
            cond = And([price_atom(o, p) for o, p in prices.items()])
            fs.append(Implies(cond, Or([holdings[X] for X in D])) if D else Not(cond))
    return fs


@dataclass(frozen=True)
class MarketOutcome:
    prices: dict  # object -> Fraction
    holder: dict  # object -> agent

    def bundle(self, net: TradingNetwork, i) -> frozenset:
        return frozenset(o for o in net.objects_of[i] if self.holder[o] == i)

    def traded(self, net: TradingNetwork) -> list:
        return [o for o in net.objects if self.holder[o] == net.trade[o].buyer]


def decode_outcome(model: Mapping, net: TradingNetwork, grid: PriceGrid) -> MarketOutcome:
    prices = {}
    for o in net.objects:
        prices[o] = next(p for p in grid.prices(o) if model.get(("price", o, p)))
    holder = {o: (net.trade[o].buyer if model.get(("consumes", net.trade[o].buyer, o)) else net.trade[o].seller) for o in net.objects}
    return MarketOutcome(prices, holder)


def solve_eps_walrasian(net: TradingNetwork, n: int, check_caps: bool = True) -> MarketOutcome | None:
    """A grid outcome; object by object, the satisfiable price closest to zero is fixed."""
    grid = make_grid(net, n, check_caps)
    cs = to_cnf(encode_eps_walrasian(net, grid, check_caps))
    s = Solver(cs)
    if s.solve() is None:
        return None
    fixed: list[int] = []
    for o in net.objects:
        for p in sorted(grid.prices(o), key=lambda p: (abs(p), p < 0)):
            lit = cs.lit(("price", o, p))
            if s.solve(fixed + [lit]) is not None:
                fixed.append(lit)
                break
    return decode_outcome(s.solve(fixed), net, grid)


def verify_eps_walrasian(
    net: TradingNetwork, out: MarketOutcome, eps: Mapping | Fraction | int = 0, grid: PriceGrid | None = None
) -> bool:
    """Each agent's allocated bundle lies in its ``eps_i``-demand at ``out.prices``."""
    for o in net.objects:
        if o not in out.holder or o not in out.prices:
            raise NetworkError(f"outcome does not cover object {o}")
        t = net.trade[o]
        if out.holder[o] not in (t.seller, t.buyer):
            raise NetworkError(f"object {o} held by a non-party {out.holder[o]}")
        if grid is not None and not grid.contains(o, out.prices[o]):
            raise NetworkError(f"price {out.prices[o]} of {o} is off the grid")
    for i in net.agents:
        if not net.objects_of[i]:
            continue
        e = Fraction(eps[i]) if isinstance(eps, Mapping) else Fraction(eps)
        if out.bundle(net, i) not in demand(net, i, out.prices, e):
            return False
    return True


def _coeffs(net: TradingNetwork, i, X: frozenset) -> dict:
    c = {}
    for o in net.objects_of[i]:
        t = net.trade[o]
        if t.buyer == i and o in X:
            c[o] = -1
        elif t.seller == i and o not in X:
            c[o] = 1
    return c


def supporting_prices_lp(net: TradingNetwork, holder: Mapping) -> tuple[list, list, list]:
    """Linear system in shifted prices ``q_o = p_o + H_o`` (``0 <= q_o <= 2 H_o``).

    Feasible points are exactly the bounded prices at which ``holder`` is an
    exact equilibrium allocation.  Returns ``(A_ub, b_ub, bounds H)``; None if
    some agent's bundle is impossible.
    """
    objs = list(net.objects)
    idx = {o: k for k, o in enumerate(objs)}
    H = [compute_price_bound(net, o) for o in objs]
    A, b = [], []
    for k in range(len(objs)):
        row = [Fraction(0)] * len(objs)
        row[k] = Fraction(1)
        A.append(row)
        b.append(Fraction(2 * H[k]))
    for i in net.agents:
        Oi = net.objects_of[i]
        if not Oi:
            continue
        X = frozenset(o for o in Oi if holder[o] == i)
        uX = net.utility[i][X]
        if uX is None:
            return None
        cX = _coeffs(net, i, X)
        for Y in subsets(Oi):
            uY = net.utility[i][Y]
            if uY is None or Y == X:
                continue
            cY = _coeffs(net, i, Y)
            # payoff(Y) <= payoff(X) with p = q - H
            row = [Fraction(0)] * len(objs)
            rhs = uX - uY
            for o in Oi:
                d = cY.get(o, 0) - cX.get(o, 0)
                row[idx[o]] += d
                rhs += d * H[idx[o]]
            A.append(row)
            b.append(rhs)
    return A, b, H


def exact_prices(net: TradingNetwork, holder: Mapping) -> dict | None:
    """Exact equilibrium prices supporting ``holder``, or None.

    The answer is the average of the extreme points minimizing and maximizing
    each price, which is feasible by convexity and sits inside every price's
    supporting interval.
    """
    sys = supporting_prices_lp(net, holder)
    if sys is None:
        return None
    A, b, H = sys
    objs = list(net.objects)
    if not objs:
        return {}
    points = []
    for k in range(len(objs)):
        for sense in (False, True):
            c = [0] * len(objs)
            c[k] = 1
            res = linprog_exact(c, A, b, maximize=sense)
            if res.status != "optimal":
                return None
            points.append(res.x)
    avg = [sum(col) / len(points) for col in zip(*points)]
    return {o: avg[k] - H[k] for k, o in enumerate(objs)}


def walrasian_bruteforce(net: TradingNetwork, max_objects: int = 8) -> list[MarketOutcome]:
    """Every equilibrium allocation (each object to seller or buyer) with supporting prices."""
    if len(net.objects) > max_objects:
        raise NetworkError("too many objects for exhaustive search")
    out = []
    for choice in product((False, True), repeat=len(net.objects)):
        holder = {o: (net.trade[o].buyer if c else net.trade[o].seller) for o, c in zip(net.objects, choice)}
        sys = supporting_prices_lp(net, holder)
        if sys is None:
            continue
        A, b, H = sys
        res = linprog_exact([0] * len(net.objects), A, b)
        if res.status == "optimal":
            out.append(MarketOutcome({o: res.x[k] - H[k] for k, o in enumerate(net.objects)}, holder))
    return out


def refine_to_exact(
    net: TradingNetwork, ns: Sequence[int] = (1, 2, 4, 8), validate: bool = False, check_caps: bool = True
) -> MarketOutcome:
    """Walk up the resolutions and lift the first stabilized allocation to exact prices.

    At each resolution the grid outcome's allocation is tried, newest first
    among those seen so far; an allocation is accepted once exact supporting
    prices exist.
    """
    if validate:
        for i in net.agents:
            ok, bad = check_substitutable(net, i)
            if not ok:
                raise NetworkError(f"agent {i} is not substitutable on the integer grid: {bad}")
    seen: list[dict] = []
    for n in ns:
        out = solve_eps_walrasian(net, n, check_caps)
        if out is None:
            continue
        if out.holder not in seen:
            seen.append(out.holder)
        for holder in reversed(seen):
            prices = exact_prices(net, holder)
            if prices is not None:
                return MarketOutcome(prices, dict(holder))
    raise NonConvergence(f"no grid allocation admitted exact prices up to resolution {max(ns, default=0)}")
