"""Propositional formulas as immutable, hash-consed-friendly trees.

Formulas are ordinary Python objects; subformulas may be shared, so a
formula is really a DAG.  Evaluation and CNF conversion memoize on node
identity, which keeps shared structure from blowing up.
"""

from __future__ import annotations

from collections.abc import Hashable, Iterable, Mapping


class UnassignedAtom(KeyError):
    """Raised when evaluating a formula under a model that misses one of its atoms."""


class Formula:
    __slots__ = ("kind", "args", "_hash")

    def __init__(self, kind: str, args: tuple):
        self.kind = kind
        self.args = args
        self._hash = hash((kind, args))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Formula) or self._hash != other._hash:
            return False
        return self.kind == other.kind and self.args == other.args

    def __repr__(self) -> str:
        if self.kind == "atom":
            return f"Atom({self.args[0]!r})"
        return f"{self.kind.capitalize()}({', '.join(map(repr, self.args))})"

    # operator sugar
    def __invert__(self) -> Formula:
        return Not(self)

    def __and__(self, other: Formula) -> Formula:
        return And(self, other)

    def __or__(self, other: Formula) -> Formula:
        return Or(self, other)

    def __rshift__(self, other: Formula) -> Formula:
        return Implies(self, other)

    def atoms(self) -> set:
        """Labels of all atoms occurring in the formula."""
        out: set = set()
        seen: set[int] = set()
        stack = [self]
        while stack:
            f = stack.pop()
            if id(f) in seen:
                continue
            seen.add(id(f))
            if f.kind == "atom":
                out.add(f.args[0])
            else:
                stack.extend(f.args)
        return out


def Atom(label: Hashable) -> Formula:
    return Formula("atom", (label,))


def Not(f: Formula) -> Formula:
    return Formula("not", (f,))


def _nary(kind: str, fs: tuple) -> Formula:
    if len(fs) == 1 and not isinstance(fs[0], Formula):
        fs = tuple(fs[0])
    if not fs:
        raise ValueError(f"{kind} needs at least one operand")
    for f in fs:
        if not isinstance(f, Formula):
            raise TypeError(f"{kind} operand is not a Formula: {f!r}")
    return Formula(kind, tuple(fs))


def And(*fs) -> Formula:
    """Conjunction; accepts operands or a single iterable of operands."""
    return _nary("and", fs)


def Or(*fs) -> Formula:
    """Disjunction; accepts operands or a single iterable of operands."""
    return _nary("or", fs)


def Implies(a: Formula, b: Formula) -> Formula:
    return Formula("implies", (a, b))


def Iff(a: Formula, b: Formula) -> Formula:
    return Formula("iff", (a, b))


def implies_any(antecedent: Formula, disjuncts: Iterable[Formula]) -> Formula:
    """``antecedent -> OR(disjuncts)``; an empty disjunction is FALSE."""
    ds = list(disjuncts)
    if not ds:
        return Not(antecedent)
    return Implies(antecedent, Or(ds) if len(ds) > 1 else ds[0])


def at_most_one(fs: Iterable[Formula]) -> list[Formula]:
    """Pairwise exclusion formulas ``a -> not b``."""
    fs = list(fs)
    return [Implies(fs[i], Not(fs[j])) for i in range(len(fs)) for j in range(i + 1, len(fs))]


def evaluate(f: Formula, model: Mapping) -> bool:
    """Truth value of ``f`` under ``model`` (a mapping label -> bool)."""
    memo: dict[int, bool] = {}

    def go(g: Formula) -> bool:
        key = id(g)
        if key in memo:
            return memo[key]
        k = g.kind
        if k == "atom":
            label = g.args[0]
            try:
                r = bool(model[label])
            except KeyError:
                raise UnassignedAtom(label) from None
        elif k == "not":
            r = not go(g.args[0])
        elif k == "and":
            r = all(go(c) for c in g.args)
        elif k == "or":
            r = any(go(c) for c in g.args)
        elif k == "implies":
            r = (not go(g.args[0])) or go(g.args[1])
        elif k == "iff":
            r = go(g.args[0]) == go(g.args[1])
        else:  # pragma: no cover
            raise ValueError(f"unknown node kind {k}")
        memo[key] = r
        return r

    return go(f)
