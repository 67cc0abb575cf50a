"""Random utility: stochastic choice data, order distributions and tuple marginals.

A dataset records ``P(A, x)``, the probability that ``x`` is chosen from
menu ``A``.  It is rationalizable when some distribution over total orders
of the items puts exactly that mass on orders ranking ``x`` above the rest of
``A``.  The grid encoding works with the marginals ``p(a1, ..., am)``, the
probability that ``a1 > a2 > ... > am``, rounded down to multiples of
``2**-n``; variables are ``("prob", n, tuple, v)``.

Sum constraints on one-hot values are emitted as small binary circuits over
shared formula nodes: each one-hot value is read off as bits, bits are added
with ripple-carry adders and compared.  Under the existence and uniqueness
constraints this is equivalent to the plain disjunction over admissible value
combinations, which ``literal=True`` emits instead (exponential, small n only).
"""

from __future__ import annotations

from collections.abc import Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement, permutations, product
from math import ceil, factorial, floor

from .logic import And, Atom, Formula, Iff, Implies, Not, Or, solve, to_cnf
from .lp import feasible_point

MAX_ITEMS = 6
MAX_ARSP_UNION = 7


class SizeBoundError(ValueError):
    pass


def _prob(v, tolerance) -> Fraction:
    if isinstance(v, float):
        if tolerance is None:
            raise TypeError("float probabilities need an explicit tolerance; pass exact rationals")
        return Fraction(str(v))
    if isinstance(v, str):
        return Fraction(v)
    return Fraction(v)


@dataclass(frozen=True)
class StochDataset:
    items: tuple
    entries: dict  # (frozenset menu, item) -> Fraction

    def __init__(
        self,
        items: Iterable[Hashable],
        entries: Iterable[tuple[Iterable[Hashable], Hashable, object]] | Mapping = (),
        tolerance: Fraction | None = None,
    ):
        items = tuple(items)
        if len(set(items)) != len(items):
            raise ValueError("duplicate items")
        if isinstance(entries, Mapping):
            entries = [(A, x, p) for (A, x), p in entries.items()]
        table: dict = {}
        for A, x, p in entries:
            A = frozenset(A)
            if not A or not A <= set(items):
                raise ValueError(f"menu {sorted(map(str, A))} is empty or mentions unknown items")
            if x not in A:
                raise ValueError(f"choice {x} not in its menu")
            p = _prob(p, tolerance)
            if not 0 <= p <= 1:
                raise ValueError("probabilities must lie in [0, 1]")
            if (A, x) in table:
                raise ValueError("duplicate entry")
            table[(A, x)] = p
        tol = Fraction(tolerance) if tolerance is not None else Fraction(0)
        for A in {A for A, _ in table}:
            recorded = [table[(A, x)] for x in A if (A, x) in table]
            total = sum(recorded)
            if total > 1 + tol or (len(recorded) == len(A) and abs(total - 1) > tol):
                raise ValueError(f"probabilities on menu {sorted(map(str, A))} do not sum to 1")
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "entries", table)

    def menus(self) -> list[frozenset]:
        return sorted({A for A, _ in self.entries}, key=self._menu_key)

    def _menu_key(self, A):
        pos = {x: i for i, x in enumerate(self.items)}
        return (len(A), sorted(pos[a] for a in A))

    def sorted_entries(self) -> list[tuple[frozenset, Hashable]]:
        pos = {x: i for i, x in enumerate(self.items)}
        return sorted(self.entries, key=lambda e: (self._menu_key(e[0]), pos[e[1]]))


def tops(order: Sequence, A: frozenset, x) -> bool:
    """Does ``order`` (best first) rank ``x`` above every other member of ``A``?"""
    for y in order:
        if y in A:
            return y == x
    return False


def check_arsp(ds: StochDataset, max_len: int = 3) -> tuple[bool, list | None]:
    """ARSP over all entry sequences (with repetition) of length up to ``max_len``.

    Order within a sequence is irrelevant to both sides, so multisets are
    enumerated.  The witness is the first violating sequence.
    """
    entries = ds.sorted_entries()
    for k in range(1, max_len + 1):
        for seq in combinations_with_replacement(entries, k):
            union = frozenset().union(*(A for A, _ in seq))
            if len(union) > MAX_ARSP_UNION:
                raise SizeBoundError(f"sequence mentions {len(union)} items")
            lhs = sum(ds.entries[e] for e in seq)
            if _best_order_count(seq, union, ds.items, bound=lhs) < lhs:
                return False, list(seq)
    return True, None


def _best_order_count(seq, union, items, bound=None) -> int:
    ordered = [x for x in items if x in union]
    best = 0
    for perm in permutations(ordered):
        c = sum(1 for A, x in seq if tops(perm, A, x))
        if c > best:
            best = c
            if bound is not None and best >= bound:
                break
    return best


def arsp_slack(ds: StochDataset, seq: Sequence) -> Fraction:
    """``max_order count - sum of probabilities``; negative means a violation."""
    union = frozenset().union(*(A for A, _ in seq))
    return _best_order_count(seq, union, ds.items) - sum(ds.entries[e] for e in seq)


@dataclass(frozen=True)
class OrderDistribution:
    items: tuple
    weights: dict  # order tuple (best first) -> Fraction

    def validate(self) -> None:
        if any(w < 0 for w in self.weights.values()) or sum(self.weights.values()) != 1:
            raise ValueError("weights must be non-negative and sum to 1")
        for order in self.weights:
            if sorted(map(repr, order)) != sorted(map(repr, self.items)):
                raise ValueError(f"{order} is not an order of the items")

    def choice_prob(self, A: Iterable, x) -> Fraction:
        A = frozenset(A)
        return sum((w for o, w in self.weights.items() if tops(o, A, x)), Fraction(0))

    def tuple_prob(self, t: Sequence) -> Fraction:
        def ranked(o):
            pos = {y: i for i, y in enumerate(o)}
            return all(pos[a] < pos[b] for a, b in zip(t, t[1:]))

        return sum((w for o, w in self.weights.items() if ranked(o)), Fraction(0))

    def induced_dataset(self, menus: Iterable[Iterable]) -> StochDataset:
        entries = [(A, x, self.choice_prob(A, x)) for A in map(frozenset, menus) for x in A]
        return StochDataset(self.items, entries)


def rationalize_finite(ds: StochDataset) -> OrderDistribution | None:
    """Weights over all orders of the items reproducing every entry; None if infeasible."""
    if len(ds.items) > MAX_ITEMS:
        raise SizeBoundError(f"{len(ds.items)} items exceed the bound {MAX_ITEMS}")
    orders = list(permutations(ds.items))
    A_eq = [[1] * len(orders)]
    b_eq = [Fraction(1)]
    for A, x in ds.sorted_entries():
        A_eq.append([1 if tops(o, A, x) else 0 for o in orders])
        b_eq.append(ds.entries[(A, x)])
    w = feasible_point(len(orders), A_eq=A_eq, b_eq=b_eq)
    if w is None:
        return None
    return OrderDistribution(ds.items, dict(zip(orders, w)))


@dataclass
class MarginalFamily:
    values: dict = field(default_factory=dict)  # tuple of distinct items -> Fraction

    @classmethod
    def from_distribution(cls, dist: OrderDistribution, max_len: int) -> MarginalFamily:
        return cls({t: dist.tuple_prob(t) for t in tuples_upto(dist.items, max_len)})


def tuples_upto(items: Sequence, L: int) -> list[tuple]:
    out: list[tuple] = []
    for m in range(1, min(L, len(items)) + 1):
        out.extend(permutations(items, m))
    return out


def insertions(t: tuple, a) -> list[tuple]:
    return [t[:i] + (a,) + t[i:] for i in range(len(t) + 1)]


def check_marginal_consistency(mf: MarginalFamily, eps: Fraction = Fraction(0)) -> tuple[bool, tuple | None]:
    """Singleton-one and insertion identities on every fully stored instance.

    With ``eps > 0`` the insertion sum may fall short of the parent by up to
    ``(m+1)*eps``, the rounding slack of the grid encoding.
    """
    vals = mf.values
    items: list = []
    for t in vals:
        for a in t:
            if a not in items:
                items.append(a)
    for t, v in vals.items():
        if len(t) == 1 and v != 1:
            return False, ("singleton", t, v)
    for t, v in vals.items():
        for a in items:
            if a in t:
                continue
            ins = insertions(t, a)
            if all(s in vals for s in ins):
                total = sum(vals[s] for s in ins)
                if not (v - len(ins) * eps <= total <= v):
                    return False, ("insertion", t, a, v, total)
    return True, None


# --- grid encoding ---------------------------------------------------------

def _not(a):
    return (not a) if isinstance(a, bool) else Not(a)


def _and(a, b):
    if isinstance(a, bool):
        return b if a else False
    if isinstance(b, bool):
        return a if b else False
    return And(a, b)


def _or(a, b):
    if isinstance(a, bool):
        return True if a else b
    if isinstance(b, bool):
        return True if b else a
    return Or(a, b)


def _xor(a, b):
    if isinstance(a, bool):
        return _not(b) if a else b
    if isinstance(b, bool):
        return _not(a) if b else a
    return Not(Iff(a, b))


def add_bits(x: list, y: list) -> list:
    """Ripple-carry sum of two little-endian bit vectors."""
    w = max(len(x), len(y))
    x = x + [False] * (w - len(x))
    y = y + [False] * (w - len(y))
    out, carry = [], False
    for a, b in zip(x, y):
        s = _xor(a, b)
        out.append(_xor(s, carry))
        carry = _or(_and(a, b), _and(carry, s))
    out.append(carry)
    return out


def const_bits(k: int, width: int) -> list:
    return [bool(k >> i & 1) for i in range(width)]


def le_bits(x: list, y: list):
    """``x <= y`` as a formula (or constant) over little-endian bit vectors."""
    w = max(len(x), len(y))
    x = x + [False] * (w - len(x))
    y = y + [False] * (w - len(y))
    res = True
    for a, b in zip(x, y):
        # from the low bit up: x<=y on bits 0..i
        res = _or(_and(_not(a), b), _and(_not(_xor(a, b)), res))
    return res


def onehot_bits(atoms: Sequence[Formula]) -> list:
    """Binary value of a one-hot vector: bit i is the disjunction of atoms whose index has bit i."""
    width = max(1, (len(atoms) - 1).bit_length())
    out = []
    for i in range(width):
        on = [a for j, a in enumerate(atoms) if j >> i & 1]
        out.append(Or(on) if len(on) > 1 else (on[0] if on else False))
    return out


def prob_atom(n: int, t: tuple, v: Fraction) -> Formula:
    return Atom(("prob", n, t, v))


def encode_stoch_fragment(ds: StochDataset, n_max: int, L: int = 3, literal: bool = False) -> list[Formula]:
    """Formula types 1-6 for levels ``0..n_max`` over tuples of length ``<= max(L, largest menu)``."""
    if len(ds.items) > MAX_ITEMS:
        raise SizeBoundError(f"{len(ds.items)} items exceed the bound {MAX_ITEMS}")
    longest = max([L] + [len(A) for A, _ in ds.entries])
    tuples = tuples_upto(ds.items, longest)
    tset = set(tuples)
    fs: list[Formula] = []
    for n in range(n_max + 1):
        top = 2 ** n
        atoms = {t: [prob_atom(n, t, Fraction(j, top)) for j in range(top + 1)] for t in tuples}
        bits = {t: onehot_bits(a) for t, a in atoms.items()}
        for t in tuples:
            A = atoms[t]
            fs.append(Or(A))
            if literal:
                fs += [Implies(A[i], Not(A[j])) for i in range(top + 1) for j in range(i + 1, top + 1)]
            else:
                # two distinct values differ in some bit
                for j in range(top + 1):
                    for i, b in enumerate(bits[t]):
                        if not j >> i & 1 and not isinstance(b, bool):
                            fs.append(Implies(A[j], Not(b)))
            if n < n_max:
                finer = [prob_atom(n + 1, t, Fraction(j, 2 * top)) for j in range(2 * top + 1)]
                for j in range(top + 1):
                    fs.append(Implies(A[j], Or(finer[2 * j:2 * j + 2]) if j < top else finer[2 * j]))
            if len(t) == 1:
                fs.append(A[top])
        for t in tuples:
            for a in ds.items:
                if a in t:
                    continue
                ins = insertions(t, a)
                if not all(s in tset for s in ins):
                    continue
                m1 = len(ins)
                if literal:
                    fs.append(_literal_insertion(atoms, t, ins, top))
                else:
                    total = [False]
                    for s in ins:
                        total = add_bits(total, bits[s])
                    slack = add_bits(total, const_bits(m1, m1.bit_length()))
                    # sum <= p <= sum + (m+1)
                    fs.append(_require(_and(le_bits(total, bits[t]), le_bits(bits[t], slack))))
        for A, x in ds.sorted_entries():
            P = ds.entries[(A, x)]
            rest = [y for y in ds.items if y in A and y != x]
            group = [(x,) + perm for perm in permutations(rest)]
            k = factorial(len(rest))
            hi = floor(P * top)
            lo = max(0, ceil(P * top - k))
            if literal:
                fs.append(_literal_sum(atoms, group, lo, hi, top))
            else:
                total = [False]
                for s in group:
                    total = add_bits(total, bits[s])
                w = len(total) + 1
                fs.append(_require(_and(le_bits(const_bits(lo, w), total), le_bits(total, const_bits(hi, w)))))
    return fs


def _require(c) -> Formula:
    if c is True or c is False:
        raise AssertionError("constraint folded to a constant; encoding bug")
    return c


def _literal_insertion(atoms, t, ins, top) -> Formula:
    disj = []
    for vals in product(range(top + 1), repeat=len(ins)):
        s = sum(vals)
        for p in range(s, min(top, s + len(ins)) + 1):
            disj.append(And([atoms[t][p]] + [atoms[u][v] for u, v in zip(ins, vals)]))
    return Or(disj)


def _literal_sum(atoms, group, lo, hi, top) -> Formula:
    disj = [
        And([atoms[u][v] for u, v in zip(group, vals)])
        for vals in product(range(top + 1), repeat=len(group))
        if lo <= sum(vals) <= hi
    ]
    return Or(disj)


def decode_marginals(model: Mapping, n_max: int, L: int = 3, level: int | None = None) -> MarginalFamily:
    """Values of every ``prob`` variable at ``level`` (default the finest)."""
    level = n_max if level is None else level
    vals: dict = {}
    for lab, on in model.items():
        if on and isinstance(lab, tuple) and lab[0] == "prob" and lab[1] == level and len(lab[2]) <= L:
            vals[lab[2]] = lab[3]
    return MarginalFamily(vals)


def decode_levels(model: Mapping) -> dict:
    """``(tuple, level) -> value`` for every true ``prob`` variable."""
    return {
        (lab[2], lab[1]): lab[3]
        for lab, on in model.items()
        if on and isinstance(lab, tuple) and lab[0] == "prob"
    }


def solve_stoch(ds: StochDataset, n_max: int, L: int = 3, literal: bool = False):
    return solve(to_cnf(encode_stoch_fragment(ds, n_max, L, literal)))


def first_unsat_level(ds: StochDataset, n_hi: int, L: int = 3) -> int | None:
    """Smallest level at which the fragment through that level is UNSAT, if any up to ``n_hi``.

    At a finite level the rounding slack can absorb small ARSP violations, so
    this is the per-instance detection threshold.
    """
    for n in range(n_hi + 1):
        if solve_stoch(ds, n, L) is None:
            return n
    return None
