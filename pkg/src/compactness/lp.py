"""Exact rational linear programming (two-phase simplex, Bland's rule).

Small dense problems only; all arithmetic is in ``fractions.Fraction`` so
feasibility answers are exact.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: list[Fraction] | None = None
    value: Fraction | None = None

    @property
    def feasible(self) -> bool:
        return self.status != "infeasible"


def _pivot(T: list[list[Fraction]], basis: list[int], r: int, c: int) -> None:
    row = T[r]
    pv = row[c]
    if pv != 1:
        inv = 1 / pv
        T[r] = row = [v * inv for v in row]
    for i, other in enumerate(T):
        if i != r:
            f = other[c]
            if f != 0:
                T[i] = [a - f * b for a, b in zip(other, row)]
    basis[r] = c


def _simplex(T: list[list[Fraction]], basis: list[int], cost: list[Fraction], allowed: int) -> str:
    """Minimize ``cost`` over the tableau; columns >= ``allowed`` may not enter."""
    m = len(T)
    while True:
        # reduced costs
        red = list(cost[:allowed])
        for i in range(m):
            cb = cost[basis[i]]
            if cb != 0:
                row = T[i]
                for j in range(allowed):
                    red[j] -= cb * row[j]
        enter = next((j for j in range(allowed) if red[j] < 0), None)
        if enter is None:
            return "optimal"
        best = None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return "unbounded"
        _pivot(T, basis, best[1], enter)


def linprog_exact(
    c: Sequence,
    A_ub: Sequence[Sequence] = (),
    b_ub: Sequence = (),
    A_eq: Sequence[Sequence] = (),
    b_eq: Sequence = (),
    maximize: bool = False,
) -> LPResult:
    """Optimize ``c.x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``."""
    F = Fraction
    n = len(c)
    rows: list[tuple[list[Fraction], Fraction, bool]] = []
    for a, b in zip(A_ub, b_ub):
        rows.append(([F(v) for v in a], F(b), True))
    for a, b in zip(A_eq, b_eq):
        rows.append(([F(v) for v in a], F(b), False))
    n_slack = sum(1 for _, _, ub in rows if ub)
    m = len(rows)
    width = n + n_slack + m  # originals, slacks, artificials
    T: list[list[Fraction]] = []
    basis: list[int] = []
    s = 0
    for i, (a, b, ub) in enumerate(rows):
        row = a + [F(0)] * (n_slack + m) + [b]
        if ub:
            row[n + s] = F(1)
            s += 1
        if b < 0:
            row = [-v for v in row]
        row[n + n_slack + i] = F(1)
        T.append(row)
        basis.append(n + n_slack + i)
    # phase 1
    cost1 = [F(0)] * (n + n_slack) + [F(1)] * m
    _simplex(T, basis, cost1, n + n_slack)
    if sum(T[i][-1] for i in range(m) if basis[i] >= n + n_slack) != 0:
        return LPResult("infeasible")
    # drive remaining artificials out of the basis
    for i in range(m):
        if basis[i] >= n + n_slack:
            j = next((j for j in range(n + n_slack) if T[i][j] != 0), None)
            if j is not None:
                _pivot(T, basis, i, j)
    sign = -1 if maximize else 1
    cost2 = [sign * F(v) for v in c] + [F(0)] * (n_slack + m)
    status = _simplex(T, basis, cost2, n + n_slack)
    if status == "unbounded":
        return LPResult("unbounded")
    x = [F(0)] * width
    for i, bv in enumerate(basis):
        x[bv] = T[i][-1]
    xs = x[:n]
    return LPResult("optimal", xs, sum(F(ci) * xi for ci, xi in zip(c, xs)))


def feasible_point(
    n: int, A_ub: Sequence[Sequence] = (), b_ub: Sequence = (), A_eq: Sequence[Sequence] = (), b_eq: Sequence = ()
) -> list[Fraction] | None:
    """Some ``x >= 0`` meeting the constraints, or None."""
    res = linprog_exact([0] * n, A_ub, b_ub, A_eq, b_eq)
    return res.x if res.status == "optimal" else None
