"""A deterministic CDCL satisfiability solver.

Branching always picks the lowest-indexed unassigned variable and tries
FALSE first.  Assumptions are taken as the first decisions, so one solver
instance can answer many queries over the same clause set; learnt clauses
are consequences of the clauses alone and are kept between queries.

Literals are stored internally as ``2*v`` (positive) and ``2*v+1``
(negative), so negation is ``lit ^ 1``.
"""

from __future__ import annotations

from collections.abc import Hashable, Iterable, Sequence

from .cnf import ClauseSet, is_aux


class Model(dict):
    """A (possibly partial) assignment from labels to booleans."""

    def true_labels(self) -> list[Hashable]:
        return [k for k, v in self.items() if v]

    def source(self) -> Model:
        """Drop auxiliary variables."""
        return Model((k, v) for k, v in self.items() if not is_aux(k))

    def restrict(self, labels: Iterable[Hashable]) -> Model:
        return Model((k, self[k]) for k in labels)


def _enc(lit: int) -> int:
    return 2 * lit if lit > 0 else 2 * (-lit) + 1


def _dec(code: int) -> int:
    return code >> 1 if not code & 1 else -(code >> 1)


class Solver:
    """Incremental CDCL solver over a ClauseSet."""

    def __init__(self, cs: ClauseSet):
        self.cs = cs
        n = cs.num_vars
        self.n = n
        self.val = [0] * (2 * n + 2)  # per literal code: 1 true, -1 false, 0 unassigned
        self.level = [0] * (n + 1)
        self.reason: list[list[int] | None] = [None] * (n + 1)
        self.watches: list[list[list[int]]] = [[] for _ in range(2 * n + 2)]
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.next_var = 1
        self.ok = True
        self.num_learnts = 0
        self.conflicts = 0
        for c in cs.clauses:
            self.add_clause(c)

    # -- clause database -------------------------------------------------
    def add_clause(self, lits: Iterable[int]) -> None:
        """Add a clause of signed literals (solver must be at decision level 0)."""
        if not self.ok:
            return
        self._cancel_until(0)
        val = self.val
        codes: list[int] = []
        seen: set[int] = set()
        for l in lits:
            if abs(l) > self.n or l == 0:
                raise ValueError(f"literal {l} out of range")
            c = _enc(l)
            if c ^ 1 in seen or val[c] == 1:
                return  # tautology or already satisfied at root
            if c in seen or val[c] == -1:
                continue
            seen.add(c)
            codes.append(c)
        if not codes:
            self.ok = False
            return
        if len(codes) == 1:
            self._assign(codes[0], None)
            if self._propagate() is not None:
                self.ok = False
            return
        self.watches[codes[0]].append(codes)
        self.watches[codes[1]].append(codes)

    # -- trail -----------------------------------------------------------
    def _assign(self, code: int, reason: list[int] | None) -> None:
        self.val[code] = 1
        self.val[code ^ 1] = -1
        v = code >> 1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(code)

    def _cancel_until(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        val = self.val
        reason = self.reason
        start = self.trail_lim[lvl]
        nv = self.next_var
        for code in self.trail[start:]:
            val[code] = 0
            val[code ^ 1] = 0
            v = code >> 1
            reason[v] = None
            if v < nv:
                nv = v
        self.next_var = nv
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    def _propagate(self) -> list[int] | None:
        val = self.val
        watches = self.watches
        trail = self.trail
        while self.qhead < len(trail):
            false_lit = trail[self.qhead] ^ 1
            self.qhead += 1
            ws = watches[false_lit]
            watches[false_lit] = kept = []
            i = 0
            nws = len(ws)
            while i < nws:
                c = ws[i]
                i += 1
                if c[0] == false_lit:
                    c[0] = c[1]
                    c[1] = false_lit
                first = c[0]
                if val[first] == 1:
                    kept.append(c)
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    if val[lk] != -1:
                        c[1] = lk
                        c[k] = false_lit
                        watches[lk].append(c)
                        break
                else:
                    kept.append(c)
                    if val[first] == -1:
                        kept.extend(ws[i:])
                        self.qhead = len(trail)
                        return c
                    self._assign(first, c)
        return None

    def _analyze(self, confl: list[int]) -> tuple[list[int], int]:
        """First-UIP learning; returns (learnt clause, backjump level)."""
        level = self.level
        reason = self.reason
        trail = self.trail
        cur = len(self.trail_lim)
        seen = set()
        learnt = [0]
        counter = 0
        p = -1
        idx = len(trail) - 1
        clause = confl
        while True:
            start = 0 if p == -1 else 1
            for q in clause[start:]:
                v = q >> 1
                if v not in seen and level[v] > 0:
                    seen.add(v)
                    if level[v] >= cur:
                        counter += 1
                    else:
                        learnt.append(q)
            while (trail[idx] >> 1) not in seen:
                idx -= 1
            p = trail[idx]
            idx -= 1
            counter -= 1
            if counter == 0:
                break
            clause = reason[p >> 1]
        learnt[0] = p ^ 1
        if len(learnt) == 1:
            return learnt, 0
        # put the highest-level literal second so it is watched
        best = 1
        for j in range(2, len(learnt)):
            if level[learnt[j] >> 1] > level[learnt[best] >> 1]:
                best = j
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, level[learnt[1] >> 1]

    # -- search ----------------------------------------------------------
    def solve(self, assumptions: Sequence[int] = ()) -> Model | None:
        """Return a total model satisfying clauses and assumptions, or None."""
        if not self.ok:
            return None
        self._cancel_until(0)
        if self._propagate() is not None:
            self.ok = False
            return None
        assume = [_enc(a) for a in assumptions]
        for a in assumptions:
            if abs(a) > self.n or a == 0:
                raise ValueError(f"assumption {a} out of range")
        val = self.val
        n = self.n
        while True:
            confl = self._propagate()
            if confl is not None:
                self.conflicts += 1
                if not self.trail_lim:
                    self.ok = False
                    return None
                learnt, back = self._analyze(confl)
                self._cancel_until(back)
                if len(learnt) == 1:
                    self._assign(learnt[0], None)
                else:
                    self.watches[learnt[0]].append(learnt)
                    self.watches[learnt[1]].append(learnt)
                    self.num_learnts += 1
                    self._assign(learnt[0], learnt)
                continue
            dl = len(self.trail_lim)
            if dl < len(assume):
                a = assume[dl]
                if val[a] == -1:
                    self._cancel_until(0)
                    return None
                self.trail_lim.append(len(self.trail))
                if val[a] == 0:
                    self._assign(a, None)
                continue
            v = self.next_var
            while v <= n and val[2 * v] != 0:
                v += 1
            self.next_var = v
            if v > n:
                model = self._model()
                self._cancel_until(0)
                return model
            self.trail_lim.append(len(self.trail))
            self._assign(2 * v + 1, None)

    def _model(self) -> Model:
        labels = self.cs.labels
        val = self.val
        return Model((labels[v - 1], val[2 * v] == 1) for v in range(1, self.n + 1))


def solve(cs: ClauseSet, assumptions: Sequence[int] = ()) -> Model | None:
    """Decide ``cs`` under ``assumptions``; ``None`` means UNSAT."""
    return Solver(cs).solve(assumptions)


def enumerate_models(
    cs: ClauseSet,
    project: Sequence[Hashable] | None = None,
    limit: int | None = None,
) -> list[Model]:
    """All models projected onto ``project`` (default: source variables).

    Each found projection is excluded with a blocking clause, so the result
    lists distinct projections in discovery order.
    """
    if project is None:
        project = cs.source_labels
    idx = [cs.index(lab) for lab in project]
    s = Solver(cs)
    out: list[Model] = []
    while limit is None or len(out) < limit:
        m = s.solve()
        if m is None:
            break
        proj = m.restrict(project)
        out.append(proj)
        if not idx:
            break
        s.add_clause([-i if proj[lab] else i for i, lab in zip(idx, project)])
    return out


def count_models(cs: ClauseSet, project: Sequence[Hashable] | None = None) -> int:
    return len(enumerate_models(cs, project))
