"""Clause sets, variable registries and structural CNF conversion.

Conversion goes through negation normal form, after which every
subformula occurs positively, so each auxiliary variable needs only the
one-directional definition ``aux -> subformula``.  That keeps the clause
set equisatisfiable with the input and small.
"""

from __future__ import annotations

from collections.abc import Hashable, Iterable, Sequence
from dataclasses import dataclass, field

from .formula import Formula


@dataclass(frozen=True, order=True)
class Aux:
    """Label of an auxiliary (Tseitin) variable."""

    n: int

    def __repr__(self) -> str:
        return f"Aux({self.n})"


def is_aux(label: Hashable) -> bool:
    return isinstance(label, Aux)


class Registry:
    """Dense 1-based variable indices for hashable labels."""

    def __init__(self, labels: Iterable[Hashable] = ()):
        self.labels: list[Hashable] = []
        self._index: dict[Hashable, int] = {}
        for lab in labels:
            self.var(lab)

    def var(self, label: Hashable) -> int:
        i = self._index.get(label)
        if i is None:
            self.labels.append(label)
            i = self._index[label] = len(self.labels)
        return i

    def get(self, label: Hashable) -> int | None:
        return self._index.get(label)

    def __contains__(self, label: Hashable) -> bool:
        return label in self._index

    def __len__(self) -> int:
        return len(self.labels)

    def fresh_aux(self) -> int:
        return self.var(Aux(len(self.labels) + 1))


@dataclass(frozen=True)
class ClauseSet:
    """CNF over variables ``1..num_vars`` with DIMACS-style signed literals."""

    num_vars: int
    clauses: tuple[tuple[int, ...], ...]
    labels: tuple[Hashable, ...]
    _index: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if len(self.labels) != self.num_vars:
            raise ValueError("label count must equal variable count")
        for c in self.clauses:
            if not c:
                raise ValueError("empty clause")
            s = set(c)
            if len(s) != len(c) or any(-l in s for l in c):
                raise ValueError(f"clause not normalized: {c}")
            if any(abs(l) > self.num_vars or l == 0 for l in c):
                raise ValueError(f"literal out of range in {c}")
        object.__setattr__(self, "_index", {lab: i + 1 for i, lab in enumerate(self.labels)})

    def index(self, label: Hashable) -> int:
        return self._index[label]

    def label(self, var: int) -> Hashable:
        return self.labels[var - 1]

    def lit(self, label: Hashable, value: bool = True) -> int:
        """Signed literal asserting ``label`` has ``value``."""
        i = self._index[label]
        return i if value else -i

    def __contains__(self, label: Hashable) -> bool:
        return label in self._index

    @property
    def num_aux(self) -> int:
        return sum(1 for lab in self.labels if is_aux(lab))

    @property
    def source_labels(self) -> list[Hashable]:
        return [lab for lab in self.labels if not is_aux(lab)]


def normalize_clause(lits: Iterable[int]) -> tuple[int, ...] | None:
    """Deduplicate literals; ``None`` for a tautology."""
    out: list[int] = []
    seen: set[int] = set()
    for l in lits:
        if -l in seen:
            return None
        if l not in seen:
            seen.add(l)
            out.append(l)
    return tuple(out)


_TRUE = ("true",)


class _Converter:
    def __init__(self, reg: Registry):
        self.reg = reg
        self.atom_vars: dict[Formula, int] = {}  # Formula caches its hash; labels may not
        self.nnf_memo: dict[tuple[int, bool], object] = {}
        self.keep: list[Formula] = []  # pin ids of memoized nodes
        self.def_memo: dict[int, int] = {}
        self.clauses: list[tuple[int, ...]] = []
        self.clause_keys: set[frozenset] = set()

    def emit(self, lits: Iterable[int]) -> None:
        c = normalize_clause(lits)
        if c is None:
            return
        key = frozenset(c)
        if key in self.clause_keys:
            return
        self.clause_keys.add(key)
        self.clauses.append(c)

    # NNF nodes: int literal, _TRUE, or ("and"|"or", children)
    def nnf(self, f: Formula, neg: bool):
        key = (id(f), neg)
        hit = self.nnf_memo.get(key)
        if hit is not None:
            return hit
        k = f.kind
        if k == "atom":
            v = self.atom_vars.get(f)
            if v is None:
                v = self.atom_vars[f] = self.reg.var(f.args[0])
            r = -v if neg else v
        elif k == "not":
            r = self.nnf(f.args[0], not neg)
        elif k in ("and", "or"):
            conj = (k == "and") != neg
            r = self.combine("and" if conj else "or", [self.nnf(c, neg) for c in f.args])
        elif k == "implies":
            a, b = f.args
            if neg:
                r = self.combine("and", [self.nnf(a, False), self.nnf(b, True)])
            else:
                r = self.combine("or", [self.nnf(a, True), self.nnf(b, False)])
        elif k == "iff":
            a, b = f.args
            if neg:
                r = self.combine("or", [
                    self.combine("and", [self.nnf(a, False), self.nnf(b, True)]),
                    self.combine("and", [self.nnf(a, True), self.nnf(b, False)]),
                ])
            else:
                r = self.combine("or", [
                    self.combine("and", [self.nnf(a, False), self.nnf(b, False)]),
                    self.combine("and", [self.nnf(a, True), self.nnf(b, True)]),
                ])
        else:
            raise ValueError(f"unknown node kind {k}")
        self.keep.append(f)
        self.nnf_memo[key] = r
        return r

    @staticmethod
    def combine(kind: str, children: list):
        flat: list = []
        for c in children:
            if c is _TRUE:
                if kind == "or":
                    return _TRUE
                continue
            if isinstance(c, tuple) and c[0] == kind:
                flat.extend(c[1])
            else:
                flat.append(c)
        if not flat:
            return _TRUE
        if kind == "or":
            lits = {c for c in flat if isinstance(c, int)}
            if any(-l in lits for l in lits):
                return _TRUE
        if len(flat) == 1:
            return flat[0]
        return (kind, tuple(flat))

    def literal_for(self, node) -> int:
        """Literal ``x`` with ``x -> node`` (one-directional definition)."""
        if isinstance(node, int):
            return node
        key = id(node)
        hit = self.def_memo.get(key)
        if hit is not None:
            return hit
        x = self.reg.fresh_aux()
        self.def_memo[key] = x
        self.keep.append(node)
        kind, children = node
        if kind == "and":
            for c in children:
                self.emit((-x, self.literal_for(c)))
        else:
            self.emit([-x] + [self.literal_for(c) for c in children])
        return x

    def assert_node(self, node) -> None:
        if node is _TRUE:
            return
        if isinstance(node, int):
            self.emit((node,))
            return
        kind, children = node
        if kind == "and":
            for c in children:
                self.assert_node(c)
        else:
            self.emit([self.literal_for(c) for c in children])


def _register_atoms(f: Formula, reg: Registry, seen: set[int], atoms: dict) -> None:
    stack = [f]
    while stack:
        g = stack.pop()
        if id(g) in seen:
            continue
        seen.add(id(g))
        if g.kind == "atom":
            if g not in atoms:
                atoms[g] = reg.var(g.args[0])
        else:
            stack.extend(reversed(g.args))


def to_cnf(formulas: Sequence[Formula], registry: Registry | None = None) -> ClauseSet:
    """Equisatisfiable CNF of the conjunction of ``formulas``.

    Source variables are numbered first (pre-registered labels, then atoms in
    order of appearance); auxiliaries follow.
    """
    reg = Registry(registry.labels) if registry is not None else Registry()
    seen: set[int] = set()
    conv = _Converter(reg)
    for f in formulas:
        _register_atoms(f, reg, seen, conv.atom_vars)
    for f in formulas:
        conv.assert_node(conv.nnf(f, False))
    return ClauseSet(len(reg), tuple(conv.clauses), tuple(reg.labels))


def clause_set(clauses: Iterable[Iterable[int]], labels: Sequence[Hashable] | None = None) -> ClauseSet:
    """Build a ClauseSet directly from integer clauses (labels default to indices)."""
    cl = [c for c in (normalize_clause(c) for c in clauses) if c is not None]
    n = max((abs(l) for c in cl for l in c), default=0)
    if labels is None:
        labels = list(range(1, n + 1))
    return ClauseSet(len(labels), tuple(cl), tuple(labels))
