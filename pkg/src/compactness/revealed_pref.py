"""Revealed preference for consumer demand data.

Three routes to the same question:

* ``check_garp``: the combinatorial axiom on the revealed-preference graph,
* ``afriat_rationalize``: the Afriat inequalities, solved exactly,
* ``encode_rationalization_fragment``: dyadic utility levels on a finite point
  set, decided by the SAT solver.

Grid variables are ``("utility", n, point, v)`` meaning "the utility of
``point`` rounded down to a multiple of 2**-n equals ``v``".  Levels run over
``0..n_max``.  Rational pairs are indexed from 0; pair ``k`` requires a gap of
``2**-(k+1)`` at every level ``n > k``.
"""

from __future__ import annotations

from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from .logic import Atom, Formula, Or, at_most_one, implies_any, Implies, And, to_cnf, solve
from .lp import feasible_point

Point = tuple  # tuple of Fractions


class GarpViolation(ValueError):
    pass


class AfriatInfeasible(ValueError):
    pass


def _vec(v: Sequence) -> Point:
    return tuple(Fraction(x) for x in v)


def dot(a: Sequence, b: Sequence) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


@dataclass(frozen=True)
class DemandDataset:
    m: int
    observations: tuple  # of (prices, bundle)

    def __init__(self, observations: Sequence[tuple[Sequence, Sequence]], m: int | None = None):
        obs = tuple((_vec(p), _vec(x)) for p, x in observations)
        if m is None:
            m = len(obs[0][0]) if obs else 0
        for p, x in obs:
            if len(p) != m or len(x) != m:
                raise ValueError("dimension mismatch")
            if any(v < 0 for v in p) or all(v == 0 for v in p):
                raise ValueError("prices must be non-negative and not all zero")
            if any(v < 0 for v in x):
                raise ValueError("bundles must be non-negative")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "observations", obs)

    def __len__(self) -> int:
        return len(self.observations)

    def prices(self, i: int) -> Point:
        return self.observations[i][0]

    def bundle(self, i: int) -> Point:
        return self.observations[i][1]


def revealed_relations(ds: DemandDataset) -> tuple[list[list[bool]], list[list[bool]]]:
    """Direct weak and strict revealed preference: ``R[i][j]`` iff x_j affordable at obs i."""
    n = len(ds)
    R = [[False] * n for _ in range(n)]
    P = [[False] * n for _ in range(n)]
    for i in range(n):
        p, x = ds.observations[i]
        own = dot(p, x)
        for j in range(n):
            c = dot(p, ds.bundle(j))
            R[i][j] = c <= own
            P[i][j] = c < own
    return R, P


def check_garp(ds: DemandDataset) -> tuple[bool, list[int] | None]:
    """GARP via transitive closure; on failure returns a cycle of observation indices.

    The cycle ``[i0, ..., ik]`` has each step weakly revealed preferred and the
    closing step ``ik -> i0`` strict.
    """
    n = len(ds)
    R, P = revealed_relations(ds)
    reach = [row[:] for row in R]
    nxt = [[j if R[i][j] else None for j in range(n)] for i in range(n)]
    for k in range(n):
        for i in range(n):
            if reach[i][k]:
                for j in range(n):
                    if reach[k][j] and not reach[i][j]:
                        reach[i][j] = True
                        nxt[i][j] = nxt[i][k]
    for i in range(n):
        for j in range(n):
            if reach[i][j] and P[j][i]:
                path = [i]
                while path[-1] != j:
                    path.append(nxt[path[-1]][j])
                return False, path
    return True, None


def afriat_feasible(ds: DemandDataset) -> tuple[list[Fraction], list[Fraction]] | None:
    """Solve the Afriat inequalities exactly; ``(u, lam)`` or None.

    Variables are shifted so that ``u >= 0`` and ``lam >= 1``; both shifts are
    without loss of generality because the system is invariant under adding a
    constant to ``u`` and under positive scaling of ``(u, lam)``.
    """
    n = len(ds)
    if n == 0:
        return [], []
    A, b = [], []
    for i in range(n):
        p, x = ds.observations[i]
        for j in range(n):
            if i == j:
                continue
            a = dot(p, tuple(yj - xj for yj, xj in zip(ds.bundle(j), x)))
            row = [Fraction(0)] * (2 * n)
            row[j] += 1
            row[i] -= 1
            row[n + i] = -a
            A.append(row)
            b.append(a)
    sol = feasible_point(2 * n, A, b)
    if sol is None:
        return None
    return sol[:n], [1 + v for v in sol[n:]]


def afriat_rationalize(ds: DemandDataset) -> tuple[list[Fraction], list[Fraction]]:
    """Utility levels ``u_i`` and multipliers ``lam_i > 0`` meeting the Afriat inequalities."""
    ok, cycle = check_garp(ds)
    if not ok:
        raise GarpViolation(f"GARP fails along observations {cycle}")
    res = afriat_feasible(ds)
    if res is None:
        raise AfriatInfeasible("Afriat system infeasible although GARP holds")
    return res


def afriat_utility(ds: DemandDataset, u: Sequence[Fraction], lam: Sequence[Fraction]):
    """The concave piecewise-linear utility ``min_i u_i + lam_i p_i.(y - x_i)``."""

    def U(y: Sequence) -> Fraction:
        y = _vec(y)
        return min(
            u[i] + lam[i] * dot(ds.prices(i), tuple(a - b for a, b in zip(y, ds.bundle(i))))
            for i in range(len(ds))
        )

    return U


def check_afriat(ds: DemandDataset, u: Sequence, lam: Sequence) -> bool:
    for i in range(len(ds)):
        if lam[i] <= 0:
            return False
        for j in range(len(ds)):
            d = tuple(a - b for a, b in zip(ds.bundle(j), ds.bundle(i)))
            if u[j] > u[i] + lam[i] * dot(ds.prices(i), d):
                return False
    return True


# --- grid encoding ---------------------------------------------------------


def leq(a: Point, b: Point) -> bool:
    return all(x <= y for x, y in zip(a, b))


def strictly_less(a: Point, b: Point) -> bool:
    return all(x < y for x, y in zip(a, b))


def midpoint(a: Point, b: Point) -> Point:
    return tuple((x + y) / 2 for x, y in zip(a, b))


def rational_pairs(m: int) -> Iterator[tuple[Point, Point]]:
    """Diagonal enumeration of pairs ``q1 << q2`` of non-negative rational vectors.

    A rational ``a/b`` (lowest terms) has height ``a + b``; pairs are listed by
    total height, then lexicographically.
    """
    from math import gcd

    def rats(h: int) -> list[Fraction]:
        return [Fraction(a, h - a) for a in range(0, h) if gcd(a, h - a) == 1]

    def tuples(total: int, parts: int) -> Iterator[tuple]:
        if parts == 0:
            if total == 0:
                yield ()
            return
        for h in range(1, total - parts + 2):
            for r in rats(h):
                for rest in tuples(total - h, parts - 1):
                    yield (r,) + rest

    total = 2 * m
    while True:
        for t in tuples(total, 2 * m):
            q1, q2 = t[:m], t[m:]
            if strictly_less(q1, q2):
                yield q1, q2
        total += 1


@dataclass(frozen=True)
class GridConfig:
    n_max: int
    points: tuple  # of Point
    pairs: tuple = ()  # (q1, q2), index = position
    triples: tuple = ()  # (x, y, z) with z a convex combination of x and y

    def validate(self, ds: DemandDataset | None = None) -> None:
        pts = set(self.points)
        if len(pts) != len(self.points):
            raise ValueError("duplicate points")
        for q1, q2 in self.pairs:
            if q1 not in pts or q2 not in pts or not strictly_less(q1, q2):
                raise ValueError("rational pair endpoints must be in the point set and strictly ordered")
        for x, y, z in self.triples:
            if not {x, y, z} <= pts:
                raise ValueError("convex-combination witness outside the point set")
        if ds is not None:
            for _, x in ds.observations:
                if x not in pts:
                    raise ValueError(f"data bundle {x} missing from the point set")


def witness_pairs(ds: DemandDataset) -> list[tuple[Point, Point]]:
    """One pair ``(x_j, x_j + delta*1)`` per bundle that is strictly cheaper than another choice.

    ``delta`` keeps the upper point affordable at every budget under which
    ``x_j`` was strictly cheaper than the chosen bundle.
    """
    _, P = revealed_relations(ds)
    out: list[tuple[Point, Point]] = []
    seen: set = set()
    for j in range(len(ds)):
        xj = ds.bundle(j)
        if xj in seen:
            continue
        slack = [
            (dot(ds.prices(i), ds.bundle(i)) - dot(ds.prices(i), xj)) / sum(ds.prices(i))
            for i in range(len(ds)) if P[i][j]
        ]
        if not slack:
            continue
        seen.add(xj)
        d = min(slack)
        out.append((xj, tuple(v + d for v in xj)))
    return out


def make_grid_config(
    ds: DemandDataset,
    n_max: int,
    queries: Sequence[Sequence] = (),
    extra_pairs: int = 0,
    witnesses: bool = True,
) -> GridConfig:
    """Point set: data and query bundles, their pairwise midpoints and rational-pair endpoints.

    The pair enumeration starts with the data-driven witness pairs and continues
    with ``extra_pairs`` pairs of the diagonal enumeration.
    """
    base: list[Point] = []
    for x in [ds.bundle(i) for i in range(len(ds))] + [_vec(q) for q in queries]:
        if x not in base:
            base.append(x)
    pts = list(base)
    triples = []
    for a, b in combinations(base, 2):
        z = midpoint(a, b)
        triples.append((a, b, z))
        if z not in pts:
            pts.append(z)
    pairs = witness_pairs(ds) if witnesses else []
    gen = rational_pairs(ds.m or (len(base[0]) if base else 1))
    while extra_pairs > 0:
        pr = next(gen)
        if pr not in pairs:
            pairs.append(pr)
            extra_pairs -= 1
    for q1, q2 in pairs:
        for q in (q1, q2):
            if q not in pts:
                pts.append(q)
    return GridConfig(n_max, tuple(pts), tuple(pairs), tuple(triples))


def levels(n: int) -> list[Fraction]:
    """The grid ``{0, 2**-n, ..., 1}``."""
    d = 2 ** n
    return [Fraction(j, d) for j in range(d + 1)]


def floor_to(v: Fraction, n: int) -> Fraction:
    d = 2 ** n
    return Fraction((v * d).numerator // (v * d).denominator, d)


def util(n: int, x: Point, v: Fraction) -> Formula:
    return Atom(("utility", n, x, v))


def encode_rationalization_fragment(ds: DemandDataset, cfg: GridConfig) -> list[Formula]:
    cfg.validate(ds)
    fs: list[Formula] = []
    pts = cfg.points
    comparable = [(x, y) for x in pts for y in pts if x != y and leq(x, y)]
    dominated = [(x, [y for y in pts if y != x and dot(p, y) <= dot(p, x)]) for p, x in ds.observations]
    for n in range(cfg.n_max + 1):
        top = 2 ** n
        # U[x][j] stands for "value j / 2**n"; atoms are shared so conversion memoizes them
        U = {x: [util(n, x, Fraction(j, top)) for j in range(top + 1)] for x in pts}
        for x in pts:
            fs.append(Or(U[x]))
            fs += at_most_one(U[x])
            if n < cfg.n_max:
                finer = [util(n + 1, x, Fraction(j, 2 * top)) for j in range(2 * top + 1)]
                for j in range(top + 1):
                    fs.append(implies_any(U[x][j], finer[2 * j:2 * j + 2]))
        for x, y, z in cfg.triples:
            for a in range(top + 1):
                for b in range(top + 1):
                    fs.append(implies_any(And(U[x][a], U[y][b]), U[z][min(a, b):]))
        for x, y in comparable:
            for j in range(top + 1):
                fs.append(implies_any(U[x][j], U[y][j:]))
        for k, (q1, q2) in enumerate(cfg.pairs):
            if n > k:
                gap = 2 ** (n - k - 1)  # 2**-(k+1) in units of 2**-n
                for j in range(top + 1):
                    fs.append(implies_any(U[q1][j], U[q2][j + gap:]))
        for x, ys in dominated:
            for y in ys:
                for j in range(top + 1):
                    fs.append(implies_any(U[x][j], U[y][:j + 1]))
    return fs


GridUtility = dict  # (point, level) -> value


def decode_grid_utility(model: Mapping, cfg: GridConfig) -> GridUtility:
    gu: GridUtility = {}
    for n in range(cfg.n_max + 1):
        for x in cfg.points:
            for v in levels(n):
                if model.get(("utility", n, x, v), False):
                    gu[(x, n)] = v
                    break
    return gu


def solve_fragment(ds: DemandDataset, cfg: GridConfig) -> GridUtility | None:
    m = solve(to_cnf(encode_rationalization_fragment(ds, cfg)))
    return None if m is None else decode_grid_utility(m, cfg)


def verify_rationalization(ds: DemandDataset, gu: GridUtility, cfg: GridConfig) -> bool:
    """Check a grid utility against the fragment's semantic requirements."""
    n = cfg.n_max
    u = {x: gu[(x, n)] for x in cfg.points}
    for lvl in range(n):
        for x in cfg.points:
            a, b = gu[(x, lvl)], gu[(x, lvl + 1)]
            if floor_to(b, lvl) != a:
                return False
    for p, x in ds.observations:
        for y in cfg.points:
            if dot(p, y) <= dot(p, x) and u[y] > u[x]:
                return False
    for x in cfg.points:
        for y in cfg.points:
            if leq(x, y) and u[x] > u[y]:
                return False
    for x, y, z in cfg.triples:
        if u[z] < min(u[x], u[y]):
            return False
    for k, (q1, q2) in enumerate(cfg.pairs):
        for lvl in range(k + 1, n + 1):
            if gu[(q2, lvl)] < gu[(q1, lvl)] + Fraction(1, 2 ** (k + 1)):
                return False
    return True


def grid_from_values(values: Mapping[Point, Fraction], cfg: GridConfig) -> GridUtility:
    """Round a utility with values in [0, 1] down to every level of the grid."""
    return {(x, n): floor_to(Fraction(values[x]), n) for x in cfg.points for n in range(cfg.n_max + 1)}
