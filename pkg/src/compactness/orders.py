"""Extending strict partial orders to total orders.

The formula encoding uses one variable ``("gt", a, b)`` per ordered pair of
distinct elements, read as "a is above b".
"""

from __future__ import annotations

import heapq
from collections.abc import Hashable, Iterable, Sequence
from dataclasses import dataclass

from .logic import And, Atom, Formula, Implies, Model, Not, Or


class InvalidOrder(ValueError):
    pass


@dataclass(frozen=True)
class StrictPartialOrder:
    elements: tuple
    pairs: frozenset  # (a, b) means a above b

    def __init__(self, elements: Iterable[Hashable], pairs: Iterable[tuple] = ()):
        object.__setattr__(self, "elements", tuple(elements))
        object.__setattr__(self, "pairs", frozenset(tuple(p) for p in pairs))
        self.validate()

    def validate(self) -> None:
        known = set(self.elements)
        if len(known) != len(self.elements):
            raise InvalidOrder("duplicate elements")
        for a, b in self.pairs:
            if a not in known or b not in known:
                raise InvalidOrder(f"pair ({a}, {b}) mentions an unknown element")
            if a == b:
                raise InvalidOrder(f"reflexive pair ({a}, {a})")
        closure = transitive_closure(self.pairs)
        for a, b in closure:
            if a == b:
                raise InvalidOrder(f"cycle through {a}")


def transitive_closure(pairs: Iterable[tuple]) -> set[tuple]:
    succ: dict = {}
    for a, b in pairs:
        succ.setdefault(a, set()).add(b)
    out: set[tuple] = set()
    for a in list(succ):
        stack = list(succ[a])
        reached: set = set()
        while stack:
            x = stack.pop()
            if x in reached:
                continue
            reached.add(x)
            stack.extend(succ.get(x, ()))
        out.update((a, x) for x in reached)
    return out


def gt(a: Hashable, b: Hashable) -> Formula:
    return Atom(("gt", a, b))


def extension_formulas(elements: Sequence[Hashable], pairs: Iterable[tuple]) -> list[Formula]:
    """Base facts, totality, asymmetry and transitivity over ``elements``."""
    xs = list(elements)
    fs: list[Formula] = [gt(a, b) for a, b in sorted(pairs, key=lambda p: (xs.index(p[0]), xs.index(p[1])))]
    for i, a in enumerate(xs):
        for b in xs[i + 1:]:
            fs.append(Or(gt(a, b), gt(b, a)))
    for a in xs:
        for b in xs:
            if a != b:
                fs.append(Not(And(gt(a, b), gt(b, a))))
    for a in xs:
        for b in xs:
            for c in xs:
                if len({a, b, c}) == 3:
                    fs.append(Implies(And(gt(a, b), gt(b, c)), gt(a, c)))
    return fs


def encode_extension(o: StrictPartialOrder) -> list[Formula]:
    """Formulas whose models are exactly the total orders extending ``o``."""
    o.validate()
    return extension_formulas(o.elements, o.pairs)


def gt_labels(elements: Sequence[Hashable]) -> list[tuple]:
    return [("gt", a, b) for a in elements for b in elements if a != b]


def decode_order(model: Model, elements: Sequence[Hashable]) -> list:
    """Total order (top first) read off a model of the extension formulas."""
    above = {a: sum(1 for b in elements if b != a and model[("gt", a, b)]) for a in elements}
    return sorted(elements, key=lambda a: -above[a])


def extend_total_finite(o: StrictPartialOrder) -> list:
    """Kahn's algorithm, preferring the earliest-registered available element."""
    o.validate()
    pos = {x: i for i, x in enumerate(o.elements)}
    indeg = {x: 0 for x in o.elements}
    succ: dict = {x: [] for x in o.elements}
    for a, b in o.pairs:
        succ[a].append(b)
        indeg[b] += 1
    heap = [pos[x] for x in o.elements if indeg[x] == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        x = o.elements[heapq.heappop(heap)]
        out.append(x)
        for y in succ[x]:
            indeg[y] -= 1
            if indeg[y] == 0:
                heapq.heappush(heap, pos[y])
    return out


def verify_extension(o: StrictPartialOrder, total: Sequence[Hashable]) -> bool:
    if sorted(map(repr, total)) != sorted(map(repr, o.elements)) or len(set(total)) != len(total):
        raise ValueError("total order is not a permutation of the elements")
    pos = {x: i for i, x in enumerate(total)}
    return all(pos[a] < pos[b] for a, b in o.pairs)
