"""Games on graphs: strategy grids, epsilon best responses and grid epsilon-Nash profiles.

A player's payoff depends on the pure strategies of its neighbourhood
``N(i)`` (which contains ``i``) and is extended multilinearly to mixed
strategies.  Mixed strategies are tuples of Fractions indexed like the
player's strategy list.  Variables are ``("plays", i, sigma)``.
"""

from __future__ import annotations

from collections.abc import Callable, Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import lcm, prod

from .logic import And, Atom, Formula, Implies, Or, at_most_one, solve, to_cnf

MAX_COMBINATIONS = 250_000

Mixed = tuple  # of Fractions


class GameError(ValueError):
    pass


class GraphicalGame:
    def __init__(
        self,
        neighbors: Mapping[Hashable, Sequence[Hashable]],
        strategies: Mapping[Hashable, Sequence[Hashable]],
        payoffs: Mapping[Hashable, Mapping | Callable],
        players: Sequence[Hashable] | None = None,
    ):
        self.players = tuple(players) if players is not None else tuple(neighbors)
        self.neighbors = {i: tuple(neighbors[i]) for i in self.players}
        self.strategies = {i: tuple(strategies[i]) for i in self.players}
        for i in self.players:
            if i not in self.neighbors[i]:
                raise GameError(f"player {i} must be its own neighbour")
            if not self.strategies[i]:
                raise GameError(f"player {i} has no strategies")
            for j in self.neighbors[i]:
                if j not in self.strategies:
                    raise GameError(f"unknown neighbour {j} of {i}")
        self.table: dict = {}
        for i in self.players:
            spec = payoffs[i]
            tab = {}
            for combo in product(*(self.strategies[j] for j in self.neighbors[i])):
                if callable(spec):
                    v = spec(dict(zip(self.neighbors[i], combo)))
                else:
                    if combo not in spec:
                        raise GameError(f"payoff of {i} misses {combo}")
                    v = spec[combo]
                if isinstance(v, float):
                    raise TypeError("payoffs must be exact rationals")
                tab[combo] = Fraction(v)
            self.table[i] = tab

    def span(self, i) -> Fraction:
        vals = self.table[i].values()
        return max(vals) - min(vals)

    def pure_values(self, i, profile: Mapping) -> list[Fraction]:
        """Expected payoff of each pure strategy of ``i`` against the neighbours' mixed strategies."""
        others = [j for j in self.neighbors[i] if j != i]
        pos = self.neighbors[i].index(i)
        out = []
        for s in self.strategies[i]:
            total = Fraction(0)
            for idx in product(*(range(len(self.strategies[j])) for j in others)):
                w = prod((profile[j][k] for j, k in zip(others, idx)), start=Fraction(1))
                if w == 0:
                    continue
                combo = [self.strategies[j][k] for j, k in zip(others, idx)]
                combo.insert(pos, s)
                total += w * self.table[i][tuple(combo)]
            out.append(total)
        return out

    def utility(self, i, profile: Mapping) -> Fraction:
        vals = self.pure_values(i, profile)
        return sum((p * v for p, v in zip(profile[i], vals)), Fraction(0))


def pure(k: int, size: int) -> Mixed:
    return tuple(Fraction(int(j == k)) for j in range(size))


def simplex_lattice(size: int, d: int) -> list[Mixed]:
    """All probability vectors of length ``size`` with entries in ``(1/d) Z``."""
    out: list[Mixed] = []

    def rec(prefix: list[int], left: int, slots: int):
        if slots == 1:
            out.append(tuple(Fraction(v, d) for v in prefix + [left]))
            return
        for v in range(left, -1, -1):
            rec(prefix + [v], left - v, slots - 1)

    rec([], d, size)
    return out


def round_to_lattice(sigma: Sequence, d: int) -> Mixed:
    """Largest-remainder rounding; every coordinate moves by less than ``1/d``."""
    scaled = [Fraction(x) * d for x in sigma]
    base = [int(x) for x in scaled]  # floor, entries are non-negative
    short = d - sum(base)
    order = sorted(range(len(sigma)), key=lambda k: (-(scaled[k] - base[k]), k))
    for k in order[:short]:
        base[k] += 1
    return tuple(Fraction(v, d) for v in base)


@dataclass(frozen=True)
class DiscretizationPlan:
    eps: Fraction
    lipschitz: dict  # player -> L_i
    delta_hat: dict  # player -> Fraction or None (unbounded)
    delta: dict  # player -> Fraction or None
    denom: dict  # player -> lattice denominator
    grids: dict  # player -> list of Mixed

    def on_grid(self, i, sigma: Sequence) -> bool:
        return tuple(sigma) in self._sets()[i]

    def numerators(self, i) -> list[tuple[int, ...]]:
        cache = self.__dict__.get("_num_cache")
        if cache is None:
            cache = {}
            object.__setattr__(self, "_num_cache", cache)
        if i not in cache:
            d = self.denom[i]
            cache[i] = [tuple(int(p * d) for p in s) for s in self.grids[i]]
        return cache[i]

    def _sets(self):
        cache = self.__dict__.get("_set_cache")
        if cache is None:
            cache = {i: set(g) for i, g in self.grids.items()}
            object.__setattr__(self, "_set_cache", cache)
        return cache


def plan_discretization(g: GraphicalGame, eps) -> DiscretizationPlan:
    """Grids fine enough that rounding every strategy moves each payoff by at most ``eps/2``.

    ``L_i = span(u_i) * sum_{j in N(i)} |S_j|`` bounds the change of ``u_i`` per
    unit of max-coordinate perturbation of all neighbours.  Player ``i``'s
    strategy enters the payoffs of ``i`` and of every ``j`` listing ``i`` as a
    neighbour, so ``delta_i`` is the smallest ``eps / (2 L_j)`` over those.
    Lattices use the least power-of-two denominator ``d >= 1/delta_i``: this
    keeps grids nested across halvings of ``eps`` and always contains the
    uniform strategy on two actions.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise GameError("eps must be positive")
    L = {i: g.span(i) * sum(len(g.strategies[j]) for j in g.neighbors[i]) for i in g.players}
    dhat = {i: (eps / (2 * L[i]) if L[i] > 0 else None) for i in g.players}
    affected = {i: {i} for i in g.players}
    for j in g.players:
        for i in g.neighbors[j]:
            affected[i].add(j)
    delta, denom, grids = {}, {}, {}
    for i in g.players:
        cands = [dhat[j] for j in affected[i] if dhat[j] is not None]
        delta[i] = min(cands) if cands else None
        k = len(g.strategies[i])
        if delta[i] is None:
            d = 1
        else:
            d = 1
            while d < 1 / delta[i]:
                d *= 2
        denom[i] = d
        grids[i] = simplex_lattice(k, d)
    return DiscretizationPlan(eps, L, dhat, delta, denom, grids)


def _combo_count(g: GraphicalGame, plan: DiscretizationPlan, i) -> int:
    return prod(len(plan.grids[j]) for j in g.neighbors[i] if j != i)


def eps_best_responses(
    g: GraphicalGame, i, neighbor_profile: Mapping, eps, plan: DiscretizationPlan, strict: bool = False
) -> list[Mixed]:
    """Grid strategies of ``i`` within ``eps`` of the best payoff (strictly, if ``strict``)."""
    eps = Fraction(eps)
    for j in g.neighbors[i]:
        if j != i and not plan.on_grid(j, neighbor_profile[j]):
            raise GameError(f"strategy of {j} is off its grid")
    vals = g.pure_values(i, neighbor_profile)
    # integer arithmetic: grid entries are k/d, values share denominator D
    d = plan.denom[i]
    D = lcm(*(v.denominator for v in vals))
    ints = [v.numerator * (D // v.denominator) for v in vals]
    top = max(ints) * d
    bound = eps * d * D
    out = []
    for sigma, ks in zip(plan.grids[i], plan.numerators(i)):
        gain = top - sum(k * v for k, v in zip(ks, ints))
        if gain < bound or (not strict and gain == bound):
            out.append(sigma)
    return out


def plays(i, sigma: Mixed) -> Formula:
    return Atom(("plays", i, tuple(sigma)))


def encode_eps_nash(g: GraphicalGame, eps, plan: DiscretizationPlan, strict: bool = False) -> list[Formula]:
    """Existence, uniqueness and epsilon best response for every neighbour grid profile."""
    eps = Fraction(eps)
    fs: list[Formula] = []
    for i in g.players:
        if _combo_count(g, plan, i) > MAX_COMBINATIONS:
            raise GameError(f"player {i}: too many neighbour grid profiles")
    for i in g.players:
        atoms = [plays(i, s) for s in plan.grids[i]]
        fs.append(Or(atoms))
        fs += at_most_one(atoms)
    for i in g.players:
        others = [j for j in g.neighbors[i] if j != i]
        for combo in product(*(plan.grids[j] for j in others)):
            prof = dict(zip(others, combo))
            # a best pure strategy is on the grid, so the response set is never empty
            br = eps_best_responses(g, i, prof, eps, plan, strict)
            body = Or([plays(i, s) for s in br])
            fs.append(Implies(And([plays(j, s) for j, s in prof.items()]), body) if others else body)
    return fs


def decode_profile(model: Mapping, g: GraphicalGame, plan: DiscretizationPlan) -> dict:
    return {i: next(s for s in plan.grids[i] if model.get(("plays", i, s))) for i in g.players}


def verify_eps_nash(g: GraphicalGame, profile: Mapping, eps) -> tuple[bool, Fraction]:
    """Largest gain from a unilateral pure deviation, and whether it is at most ``eps``."""
    for i in g.players:
        sigma = profile[i]
        if len(sigma) != len(g.strategies[i]) or any(Fraction(p) < 0 for p in sigma) or sum(sigma) != 1:
            raise GameError(f"invalid mixed strategy for {i}")
    worst = Fraction(0)
    for i in g.players:
        vals = g.pure_values(i, profile)
        u = sum((p * v for p, v in zip(profile[i], vals)), Fraction(0))
        worst = max(worst, max(vals) - u)
    return worst <= Fraction(eps), worst


def max_gain(g: GraphicalGame, profile: Mapping) -> Fraction:
    return verify_eps_nash(g, profile, 0)[1]


def solve_eps_nash(g: GraphicalGame, eps, plan: DiscretizationPlan | None = None, minimize: bool = False) -> dict | None:
    """A grid epsilon-Nash profile; with ``minimize`` the one of least max gain on the grid.

    Minimization re-solves with the strict bound "gain below the last one"
    until that becomes unsatisfiable.
    """
    plan = plan or plan_discretization(g, eps)
    m = solve(to_cnf(encode_eps_nash(g, eps, plan)))
    if m is None:
        return None
    prof = decode_profile(m, g, plan)
    while minimize:
        gain = max_gain(g, prof)
        if gain == 0:
            break
        m = solve(to_cnf(encode_eps_nash(g, gain, plan, strict=True)))
        if m is None:
            break
        prof = decode_profile(m, g, plan)
    return prof


@dataclass
class NashRung:
    eps: Fraction
    denominators: dict
    profile: dict
    gain: Fraction


def nash_ladder(g: GraphicalGame, eps_seq: Iterable, minimize: bool = False) -> list[NashRung]:
    """Solve at each epsilon on its own plan and record the realized max gain.

    Each rung asks for gain at most ``min(eps, previous gain)``.  Lattices of
    successive rungs are nested, so the previous profile still qualifies and
    the bound never makes a rung unsatisfiable; realized gains therefore never
    increase along the ladder.
    """
    rungs: list[NashRung] = []
    for e in eps_seq:
        e = Fraction(e)
        plan = plan_discretization(g, e)
        bound = e
        if rungs and all(plan.on_grid(i, rungs[-1].profile[i]) for i in g.players):
            bound = min(e, rungs[-1].gain)
        prof = solve_eps_nash(g, bound, plan, minimize)
        if prof is None:
            raise GameError(f"no grid {e}-Nash profile; the discretization plan is unsound")
        rungs.append(NashRung(e, dict(plan.denom), prof, max_gain(g, prof)))
    return rungs
