"""Infinite formula streams, fragment ladders and prefix limits.

An ``InfiniteInstance`` is a restartable stream of finite formulas.  Its
variable enumeration is the order in which atoms first appear in the stream,
so every emitted formula only mentions enumerated variables.

Solving longer and longer prefixes of the stream ("fragments") is the
computational face of compactness: once a fragment is UNSAT every longer
one is, and a variable whose value is forced in a fragment stays forced.
"""

from __future__ import annotations

import hashlib
import json
import time
from collections.abc import Callable, Hashable, Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import count, islice

from .logic import Atom, ClauseSet, Formula, Not, Solver, at_most_one, to_cnf
from .logic.dimacs import label_str

MAX_PREFIX = 24


class InstanceFault(RuntimeError):
    """A formula generator raised or produced something that is not a formula."""


@dataclass
class InfiniteInstance:
    name: str
    stream: Callable[[], Iterable[Formula]]  # restartable: each call starts afresh
    tag: str = ""
    nested: bool = True  # False when the stream concatenates unrelated truncations
    params: dict = field(default_factory=dict)

    def formulas(self) -> Iterator[Formula]:
        return iter(self.stream())

    def variables(self) -> Iterator[Hashable]:
        seen: set = set()
        for f in self.formulas():
            for lab in _atoms_in_order(f):
                if lab not in seen:
                    seen.add(lab)
                    yield lab


def _atoms_in_order(f: Formula) -> list:
    out, seen, stack = [], set(), [f]
    while stack:
        g = stack.pop()
        if id(g) in seen:
            continue
        seen.add(id(g))
        if g.kind == "atom":
            out.append(g.args[0])
        else:
            stack.extend(reversed(g.args))
    return out


def fragment(inst: InfiniteInstance, k: int) -> list[Formula]:
    """The first ``k`` formulas of the stream."""
    if k < 0:
        raise ValueError("k must be non-negative")
    out = []
    try:
        for f in islice(inst.formulas(), k):
            if not isinstance(f, Formula):
                raise InstanceFault(f"{inst.name} emitted {f!r}")
            out.append(f)
    except InstanceFault:
        raise
    except Exception as e:
        raise InstanceFault(f"{inst.name}: generator failed after {len(out)} formulas: {e}") from e
    return out


def first_variables(inst: InfiniteInstance, m: int) -> list:
    return list(islice(inst.variables(), m))


@dataclass
class Rung:
    k: int
    sat: bool
    digest: str | None
    values: dict  # tracked label -> True/False/None (None: not mentioned yet)
    forced: dict  # tracked label -> value forced by the fragment, if any


@dataclass
class LadderReport:
    instance: str
    rungs: list[Rung]
    tracked: list
    stabilization: dict  # label -> (value, first k from which it stays forced) or None
    budget_exhausted: bool = False  # rungs beyond the time budget were not attempted

    @property
    def first_unsat(self) -> int | None:
        return next((r.k for r in self.rungs if not r.sat), None)

    def history(self, label) -> list[tuple[int, bool | None]]:
        return [(r.k, r.values.get(label)) for r in self.rungs]

    def to_json(self) -> str:
        return json.dumps(
            {
                "instance": self.instance,
                "rungs": [
                    {
                        "k": r.k,
                        "sat": r.sat,
                        "digest": r.digest,
                        "values": {label_str(l): v for l, v in r.values.items()},
                        "forced": {label_str(l): v for l, v in r.forced.items()},
                    }
                    for r in self.rungs
                ],
                "budget_exhausted": self.budget_exhausted,
                "stabilization": {
                    label_str(l): (None if s is None else {"value": s[0], "from_k": s[1]})
                    for l, s in self.stabilization.items()
                },
            },
            indent=2,
            sort_keys=True,
        )


def _digest(model, labels: Sequence) -> str:
    bits = "".join("1" if model.get(l) else "0" for l in labels)
    return hashlib.sha256(bits.encode()).hexdigest()[:16]


def ladder_solve(
    inst: InfiniteInstance,
    k_max: int,
    step: int = 1,
    track: Sequence | int | None = None,
    budget: float | None = None,
) -> LadderReport:
    """Solve fragments ``step, 2*step, ..., k_max`` and follow the tracked variables.

    A tracked variable stabilizes at the first rung from which every later
    rung forces the same value (negating it is UNSAT under the fragment).
    Once a rung is UNSAT the remaining rungs are recorded UNSAT without solving.
    ``budget`` is a wall-clock limit in seconds checked between rungs.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if track is None or isinstance(track, int):
        tracked = first_variables(inst, MAX_PREFIX if track is None else track)
    else:
        tracked = list(track)
    rungs: list[Rung] = []
    dead = False
    out_of_time = False
    start = time.monotonic()
    for k in range(step, k_max + 1, step):
        if budget is not None and time.monotonic() - start > budget:
            out_of_time = True
            break
        if dead:
            rungs.append(Rung(k, False, None, {}, {}))
            continue
        cs = to_cnf(fragment(inst, k))
        s = Solver(cs)
        m = s.solve()
        if m is None:
            dead = True
            rungs.append(Rung(k, False, None, {}, {}))
            continue
        values, forced = {}, {}
        for lab in tracked:
            if lab not in cs:
                values[lab] = None
                continue
            values[lab] = m[lab]
            if s.solve([cs.lit(lab, not m[lab])]) is None:
                forced[lab] = m[lab]
        rungs.append(Rung(k, True, _digest(m, tracked), values, forced))
    stab: dict = {}
    for lab in tracked:
        since = None
        val = None
        for r in rungs:
            if not r.sat:
                break
            if lab in r.forced and (since is None or r.forced[lab] == val):
                if since is None:
                    since, val = r.k, r.forced[lab]
            else:
                since, val = None, None
        stab[lab] = None if since is None else (val, since)
    return LadderReport(inst.name, rungs, tracked, stab, out_of_time)


def prefix_limit(
    inst: InfiniteInstance,
    m: int,
    k_max: int,
    step: int | None = None,
    all_survivors: bool = False,
    max_prefix: int = MAX_PREFIX,
) -> dict | list[dict] | None:
    """Assignments to the first ``m`` variables consistent with every tested fragment.

    Fragments ``step, 2*step, ..., k_max`` (just ``k_max`` by default) are each
    loaded into one incremental solver; the prefix tree is explored depth
    first, FALSE before TRUE, pruning a node as soon as some fragment is UNSAT
    under the partial prefix as assumptions.  Returns the first surviving
    prefix, every survivor with ``all_survivors``, or None when exhausted.
    """
    if m > max_prefix:
        raise ValueError(f"prefix length {m} exceeds {max_prefix}")
    labels = first_variables(inst, m)
    ks = [k_max] if step is None else list(range(step, k_max + 1, step))
    solvers: list[tuple[Solver, ClauseSet]] = []
    for k in ks:
        cs = to_cnf(fragment(inst, k))
        solvers.append((Solver(cs), cs))

    def consistent(assign: dict) -> bool:
        for s, cs in solvers:
            lits = [cs.lit(l, v) for l, v in assign.items() if l in cs]
            if s.solve(lits) is None:
                return False
        return True

    found: list[dict] = []

    def rec(i: int, assign: dict) -> bool:
        if not consistent(assign):
            return False
        if i == len(labels):
            found.append(dict(assign))
            return not all_survivors
        for v in (False, True):
            assign[labels[i]] = v
            if rec(i + 1, assign):
                return True
            del assign[labels[i]]
        return False

    rec(0, {})
    if all_survivors:
        return found
    return found[0] if found else None


def prefix_passes(inst: InfiniteInstance, prefix: dict, ks: Iterable[int]) -> bool:
    """Does every fragment in ``ks`` stay SAT with ``prefix`` as assumptions?"""
    for k in ks:
        cs = to_cnf(fragment(inst, k))
        lits = [cs.lit(l, v) for l, v in prefix.items() if l in cs]
        if Solver(cs).solve(lits) is None:
            return False
    return True


# --- built-in families -------------------------------------------------------


def _dedupe(blocks: Iterable[Iterable[Formula]]) -> Iterator[Formula]:
    seen: set = set()
    for block in blocks:
        for f in block:
            if f not in seen:
                seen.add(f)
                yield f


def szpilrajn_naturals(order: str = "chain") -> InfiniteInstance:
    """Total-order extension over 0, 1, 2, ...; formulas grouped by largest element.

    ``order="chain"`` streams the facts "n+1 above n", ``"empty"`` none.
    """
    from .orders import gt
    from .logic import And, Implies, Or

    def stream():
        for n in count(0):
            if order == "chain" and n > 0:
                yield gt(n, n - 1)
            for a in range(n):
                yield Or(gt(a, n), gt(n, a))
                yield Not(And(gt(a, n), gt(n, a)))
            for a in range(n + 1):
                for b in range(n + 1):
                    for c in range(n + 1):
                        if len({a, b, c}) == 3 and max(a, b, c) == n:
                            yield Implies(And(gt(a, b), gt(b, c)), gt(a, c))

    return InfiniteInstance(f"szpilrajn[{order}]", stream, "orders", params={"order": order})


def disjoint_pairs() -> InfiniteInstance:
    """Men ``m<i>`` and women ``w<i>`` who find only each other acceptable.

    Formulas are grouped by the largest participant index they mention.
    """
    from .matching import MarriageMarket, blocking_pair_formulas, matched

    def stream():
        prev: set = set()
        for n in count(1):
            mkt = MarriageMarket({f"m{i}": [f"w{i}"] for i in range(n)}, {f"w{i}": [f"m{i}"] for i in range(n)})
            # individual rationality and no-blocking before at-most-one, so every
            # variable's first mention already pins it down
            cur = [Not(matched(m, w)) for m in mkt.men for w in mkt.women if not mkt.mutually_acceptable(m, w)]
            cur += blocking_pair_formulas(mkt)
            for a in mkt.men:
                cur += at_most_one([matched(a, w) for w in mkt.women])
            for w in mkt.women:
                cur += at_most_one([matched(a, w) for a in mkt.men])
            for f in cur:
                if f not in prev:
                    yield f
            prev = set(cur)

    return InfiniteInstance("disjoint_pairs", stream, "matching")


def _time_order() -> Iterator[int]:
    yield 0
    for k in count(1):
        yield -k
        yield k


def parity_line_stream() -> InfiniteInstance:
    """The parity line, one period at a time in the order 0, -1, 1, -2, 2, ...

    A period's block holds its at-most-one and off-market formulas over the
    men present then; the no-blocking formulas of period ``t`` follow as soon
    as both ``t`` and ``t - 1`` have been emitted.  Variables are enumerated
    by period in the same order, then by man.  Men who are off the market at
    ``t`` have no variables there.
    """
    from .dynamic_matching import no_blocking_formulas, parity_line, period_formulas

    mkt = parity_line()

    def stream():
        done: set[int] = set()
        for t in _time_order():
            men = mkt.present(t)
            yield from period_formulas(mkt, t, men)
            done.add(t)
            for s in (t, t + 1):
                if s in done and s - 1 in done:
                    yield from no_blocking_formulas(mkt, s, mkt.men_between(s - 1, s), True)

    return InfiniteInstance("parity_line", stream, "dynamic")


def no_finite_presence_stream(T_values: Sequence[int] = tuple(range(2, 9))) -> InfiniteInstance:
    """Closed-window encodings of the truncations ``k <= T`` on ``[-T, -1]``, concatenated.

    The untruncated market violates finite presence, so there is no single
    formula set to stream; the truncations share variable names and their
    union is not a fragment of anything (``nested=False``).
    """
    from .dynamic_matching import encode_dynamic_window, no_finite_presence

    def stream():
        return _dedupe(encode_dynamic_window(no_finite_presence(T), (-T, -1), "closed") for T in T_values)

    return InfiniteInstance("no_finite_presence", stream, "dynamic", nested=False, params={"T": list(T_values)})


def contradiction(at: int = 5, filler: int = 10) -> InfiniteInstance:
    """``P``, then independent atoms, with ``not P`` as formula number ``at + 1``."""

    def stream():
        yield Atom("P")
        for i in count(1):
            if i == at:
                yield Not(Atom("P"))
            yield Atom(("q", i))

    return InfiniteInstance("contradiction", stream, "logic", params={"at": at})


def demand_stream(n_max: int = 1, pairs: int = 1) -> InfiniteInstance:
    """Grid-utility formulas for a growing demand dataset.

    Observation ``j`` faces prices ``(1, j+1)`` and buys ``(1/2, 1/(2(j+1)))``,
    the Cobb-Douglas choice, so the data satisfy GARP.  Blocks add one
    observation at a time; rational pairs come from the fixed diagonal
    enumeration so that blocks are nested.
    """
    from .revealed_pref import DemandDataset, encode_rationalization_fragment, make_grid_config

    def obs(j):
        p2 = Fraction(j + 1)
        return ((1, p2), (Fraction(1, 2), 1 / (2 * p2)))

    def stream():
        def blocks():
            for n in count(1):
                ds = DemandDataset([obs(j) for j in range(n)])
                cfg = make_grid_config(ds, n_max, extra_pairs=pairs, witnesses=False)
                yield encode_rationalization_fragment(ds, cfg)

        return _dedupe(blocks())

    return InfiniteInstance("demand_stream", stream, "revealed_pref", params={"n_max": n_max, "pairs": pairs})


def stoch_stream(n_max: int = 1, L: int = 2) -> InfiniteInstance:
    """Grid-marginal formulas for items ``x0, x1, ...`` with ``P({x_i, x_{i+1}}, x_i) = 1/2``."""
    from .stoch_choice import StochDataset, encode_stoch_fragment

    def stream():
        def blocks():
            for n in count(2):
                items = [f"x{i}" for i in range(n)]
                entries = [((items[i], items[i + 1]), items[i], Fraction(1, 2)) for i in range(n - 1)]
                yield encode_stoch_fragment(StochDataset(items, entries), n_max, L)

        return _dedupe(blocks())

    return InfiniteInstance("stoch_stream", stream, "stoch_choice", params={"n_max": n_max, "L": L})


FAMILIES: dict[str, Callable[..., InfiniteInstance]] = {
    "szpilrajn": szpilrajn_naturals,
    "disjoint_pairs": disjoint_pairs,
    "parity_line": parity_line_stream,
    "no_finite_presence": no_finite_presence_stream,
    "contradiction": contradiction,
    "demand": demand_stream,
    "stoch": stoch_stream,
}


def family(name: str, **params) -> InfiniteInstance:
    if name not in FAMILIES:
        raise KeyError(f"unknown family {name}; choose from {sorted(FAMILIES)}")
    return FAMILIES[name](**params)
