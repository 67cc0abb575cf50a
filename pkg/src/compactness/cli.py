"""Command-line front end.

Instances are JSON files, one domain per file.  Rationals are written as
integers or ``"num/den"`` strings; decimal notation is inexact input and is
only accepted with ``--tolerance``.  Results go to stdout (or ``--out``) as
JSON with sorted keys, so identical runs give byte-identical output.

Exit status: 0 solved or verified, 1 unsatisfiable or infeasible, 2 usage
or validation error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from . import couples, dynamic_matching, graphical_games, harness, matching, networks, orders, revealed_pref, stoch_choice
from .logic import enumerate_models, label_str, solve, to_cnf, to_dimacs

EXIT_OK, EXIT_UNSAT, EXIT_USAGE = 0, 1, 2

DOMAINS = ("marriage", "couples", "demand", "stoch", "network", "game", "dynamic", "order")


class InstanceError(ValueError):
    """Malformed instance; the message names the offending field or line."""


# --- rationals and JSON ------------------------------------------------------

_RATIONAL = re.compile(r"^\s*-?\d+(\s*/\s*\d+)?\s*$")


def parse_rational(v: Any, where: str, tolerance: Fraction | None = None) -> Fraction | float:
    """Integers and "num/den" strings are exact; decimals need a tolerance.

    With a tolerance, decimal input is returned as a float so the receiving
    module applies its own tolerance policy.
    """
    if isinstance(v, bool):
        raise InstanceError(f"{where}: expected a rational, got {v!r}")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str) and _RATIONAL.match(v):
        try:
            return Fraction(v.replace(" ", ""))
        except ZeroDivisionError:
            raise InstanceError(f"{where}: zero denominator in {v!r}") from None
    if isinstance(v, (float, str)):
        try:
            f = float(v)
        except ValueError:
            raise InstanceError(f"{where}: {v!r} is not a rational") from None
        if tolerance is None:
            raise InstanceError(f"{where}: {v!r} is decimal, hence inexact; write it as num/den or pass --tolerance")
        return f
    raise InstanceError(f"{where}: expected a rational, got {v!r}")


def _exact(v, where):
    return parse_rational(v, where)


def to_jsonable(x: Any) -> Any:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, float):
        return x
    if isinstance(x, dict):
        return {(k if isinstance(k, str) else label_str(k)): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (frozenset, set)):
        return sorted((to_jsonable(v) for v in x), key=lambda v: json.dumps(v, sort_keys=True))
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    return str(x)


def dump(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"


# --- instance parsing --------------------------------------------------------


def _load_json(path: str | Path) -> Any:
    p = Path(path)
    if not p.exists():
        raise InstanceError(f"{p}: no such file")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise InstanceError(f"{p}: line {e.lineno}, column {e.colno}: {e.msg}") from None


def _get(d: Any, key: str, where: str, kind: type | tuple = object):
    if not isinstance(d, dict):
        raise InstanceError(f"{where}: expected an object")
    if key not in d:
        raise InstanceError(f"{where}: missing field '{key}'")
    v = d[key]
    if not isinstance(v, kind):
        raise InstanceError(f"{where}.{key}: expected {getattr(kind, '__name__', kind)}")
    return v


def _marriage(d) -> matching.MarriageMarket:
    men = _get(d, "men", "instance", dict)
    women = _get(d, "women", "instance", dict)
    return matching.MarriageMarket(men, women)


def _couples(d) -> couples.CouplesMarket:
    singles = d.get("singles", {})
    cs = {}
    for cid, c in _get(d, "couples", "instance", dict).items():
        where = f"couples.{cid}"
        members = _get(c, "members", where, list)
        if len(members) != 2:
            raise InstanceError(f"{where}.members: a couple has exactly two members")
        prefs = []
        for k, pair in enumerate(_get(c, "prefs", where, list)):
            if not isinstance(pair, list) or len(pair) != 2:
                raise InstanceError(f"{where}.prefs[{k}]: expected a [hospital|null, hospital|null] pair")
            prefs.append(tuple(pair))
        if not couples.validate_downward_closed(prefs):
            missing = [
                (a, b) for a, b in prefs for q in ((a, None), (None, b)) if None not in (a, b) and q not in prefs
            ]
            raise InstanceError(f"{where}.prefs: not downward closed (missing projections of {missing[0]})")
        cs[cid] = (tuple(members), prefs)
    hs = {}
    for h, spec in _get(d, "hospitals", "instance", dict).items():
        where = f"hospitals.{h}"
        cap = _get(spec, "capacity", where, int)
        hs[h] = (cap, _get(spec, "ranking", where, list))
    return couples.CouplesMarket(singles, cs, hs)


def _demand(d) -> revealed_pref.DemandDataset:
    obs = []
    for k, o in enumerate(_get(d, "observations", "instance", list)):
        where = f"observations[{k}]"
        p = [_exact(v, f"{where}.prices[{j}]") for j, v in enumerate(_get(o, "prices", where, list))]
        x = [_exact(v, f"{where}.bundle[{j}]") for j, v in enumerate(_get(o, "bundle", where, list))]
        obs.append((p, x))
    return revealed_pref.DemandDataset(obs)


def _stoch(d, tolerance: Fraction | None) -> stoch_choice.StochDataset:
    items = _get(d, "items", "instance", list)
    tol = tolerance
    if tol is None and "tolerance" in d:
        tol = Fraction(_exact(d["tolerance"], "tolerance"))
    entries = []
    for k, e in enumerate(_get(d, "entries", "instance", list)):
        where = f"entries[{k}]"
        p = parse_rational(_get(e, "prob", where), f"{where}.prob", tol)
        x = _get(e, "choice" if "choice" in e or "item" not in e else "item", where)
        entries.append((_get(e, "menu", where, list), x, p))
    return stoch_choice.StochDataset(items, entries, tolerance=tol)


def _network(d) -> networks.TradingNetwork:
    trades = []
    for k, t in enumerate(_get(d, "trades", "instance", list)):
        if isinstance(t, dict):
            where = f"trades[{k}]"
            t = [_get(t, "object", where), _get(t, "seller", where), _get(t, "buyer", where)]
        if not isinstance(t, list) or len(t) != 3:
            raise InstanceError(f"trades[{k}]: expected {{object, seller, buyer}} or [object, seller, buyer]")
        trades.append(tuple(t))
    utils = {}
    for i, table in _get(d, "utilities", "instance", dict).items():
        if not isinstance(table, dict):
            raise InstanceError(f"utilities.{i}: expected an object keyed by bundles")
        utils[i] = {
            X: (None if v is None or v == "-inf" else _exact(v, f"utilities.{i}.{X or '{}'}")) for X, v in table.items()
        }
    return networks.TradingNetwork(trades, utils, d.get("agents"))


def _game(d) -> graphical_games.GraphicalGame:
    neighbors = _get(d, "neighbors", "instance", dict)
    strategies = _get(d, "strategies", "instance", dict)
    payoffs = {}
    for i, rows in _get(d, "payoffs", "instance", dict).items():
        tab = {}
        for k, r in enumerate(rows if isinstance(rows, list) else []):
            where = f"payoffs.{i}[{k}]"
            tab[tuple(_get(r, "profile", where, list))] = _exact(_get(r, "payoff", where), f"{where}.payoff")
        payoffs[i] = tab
    return graphical_games.GraphicalGame(neighbors, strategies, payoffs, d.get("players"))


def _dynamic(d) -> dynamic_matching.DynamicMarket:
    men = []
    for k, m in enumerate(_get(d, "men", "instance", list)):
        where = f"men[{k}]"
        men.append(
            dynamic_matching.Man(
                _get(m, "name", where),
                tuple(_get(m, "prefs", where, list)),
                _get(m, "arrival", where, int),
                _get(m, "departure", where, int),
            )
        )
    return dynamic_matching.DynamicMarket(men, _get(d, "women", "instance", dict))


def _order(d) -> orders.StrictPartialOrder:
    return orders.StrictPartialOrder(_get(d, "elements", "instance", list), [tuple(p) for p in d.get("pairs", [])])


def parse_instance(path: str | Path, domain: str, tolerance: Fraction | None = None):
    """Read and validate a JSON instance of the given domain."""
    if domain not in DOMAINS:
        raise InstanceError(f"unknown domain {domain}; choose from {', '.join(DOMAINS)}")
    d = _load_json(path)
    builders = {
        "marriage": _marriage,
        "couples": _couples,
        "demand": _demand,
        "stoch": lambda x: _stoch(x, tolerance),
        "network": _network,
        "game": _game,
        "dynamic": _dynamic,
        "order": _order,
    }
    try:
        return builders[domain](d)
    except InstanceError:
        raise
    except (ValueError, TypeError, KeyError) as e:
        raise InstanceError(f"{path}: {e}") from e


# --- run configuration and dispatch ------------------------------------------


@dataclass
class RunConfig:
    command: str
    instance: str | None = None
    family: str | None = None
    params: dict = field(default_factory=dict)
    n: int | None = None
    eps: Fraction | None = None
    L: int = 3
    pairs: int = 0
    window: tuple[int, int] | None = None
    kmax: int | None = None
    step: int | None = None
    prefix: int | None = None
    seed: int = 0
    out: str | None = None
    enumerate: bool = False
    tolerance: Fraction | None = None
    domain: str | None = None
    boundary: str = "open"
    man: str | None = None
    misreport: list | None = None
    exact: bool = False


def _matching_json(mu) -> dict:
    return {m: w for m, w in sorted(mu, key=lambda p: (str(p[0]), str(p[1])))}


def cmd_match(cfg: RunConfig):
    mkt = parse_instance(cfg.instance, "marriage")
    gs = matching.gale_shapley(mkt, "men")
    res: dict = {"men_proposing": _matching_json(gs), "stable": matching.is_stable(mkt, gs)[0]}
    if cfg.enumerate:
        res["stable_matchings"] = sorted(
            (_matching_json(mu) for mu in matching.stable_models(mkt)), key=lambda x: json.dumps(x, sort_keys=True)
        )
        res["count"] = len(res["stable_matchings"])
    return EXIT_OK, res


def cmd_match_optimal(cfg: RunConfig):
    mkt = parse_instance(cfg.instance, "marriage")
    sat = matching.man_optimal_via_sat(mkt)
    gs = matching.gale_shapley(mkt, "men")
    return EXIT_OK, {"man_optimal": _matching_json(sat), "agrees_with_deferred_acceptance": sat == gs}


def cmd_manipulate(cfg: RunConfig):
    mkt = parse_instance(cfg.instance, "marriage")
    if cfg.man is not None:
        if cfg.man not in mkt.men:
            raise InstanceError(f"unknown man {cfg.man}")
        cases = [(cfg.man, tuple(cfg.misreport or ()))]
    else:
        cases = [(m, lie) for m in mkt.men for lie in matching.ordered_sublists(mkt.women)]
    reports = [matching.check_manipulation(mkt, m, lie) for m, lie in cases]
    gains = [r for r in reports if r.improves]
    res = {
        "checked": len(reports),
        "improvements": [
            {"man": r.man, "misreport": list(r.misreport), "truthful": r.truthful_partner, "manipulated": r.manipulated_partner}
            for r in gains
        ],
    }
    return EXIT_OK, res


def cmd_couples(cfg: RunConfig):
    mkt = parse_instance(cfg.instance, "couples")
    outs = couples.solve_couples(mkt, limit=None if cfg.enumerate else 1)
    if not outs:
        return EXIT_UNSAT, {"satisfiable": False}
    rows = [
        {"assignment": o.assignment, "kstar": o.kstar, "stable": couples.is_stable_with_couples(mkt, o)[0]} for o in outs
    ]
    return EXIT_OK, {"satisfiable": True, "outcomes": rows}


def cmd_garp(cfg: RunConfig):
    ds = parse_instance(cfg.instance, "demand")
    ok, cycle = revealed_pref.check_garp(ds)
    return (EXIT_OK if ok else EXIT_UNSAT), {"garp": ok, "cycle": cycle}


def cmd_rationalize(cfg: RunConfig):
    ds = parse_instance(cfg.instance, "demand")
    sol = revealed_pref.afriat_feasible(ds)
    res: dict = {"afriat_feasible": sol is not None}
    if sol is not None:
        res["u"], res["lambda"] = sol
    if cfg.n is not None:
        grid = revealed_pref.make_grid_config(ds, cfg.n, extra_pairs=cfg.pairs)
        gu = revealed_pref.solve_fragment(ds, grid)
        res["fragment_sat"] = gu is not None
        if gu is not None:
            res["grid_utility"] = {label_str(x): v for (x, n), v in gu.items() if n == cfg.n}
        sat = gu is not None
    else:
        sat = sol is not None
    return (EXIT_OK if sat else EXIT_UNSAT), res


def cmd_arsp(cfg: RunConfig):
    ds = parse_instance(cfg.instance, "stoch", cfg.tolerance)
    ok, seq = stoch_choice.check_arsp(ds, max_len=cfg.L)
    res: dict = {"arsp": ok}
    if seq is not None:
        res["violation"] = [{"menu": sorted(map(str, A)), "choice": x} for A, x in seq]
        res["slack"] = -stoch_choice.arsp_slack(ds, seq)
    return (EXIT_OK if ok else EXIT_UNSAT), res


def cmd_stoch_rationalize(cfg: RunConfig):
    ds = parse_instance(cfg.instance, "stoch", cfg.tolerance)
    if cfg.n is not None:
        m = stoch_choice.solve_stoch(ds, cfg.n, cfg.L)
        res: dict = {"fragment_sat": m is not None, "n": cfg.n, "L": cfg.L}
        if m is not None:
            mf = stoch_choice.decode_marginals(m, cfg.n, cfg.L)
            res["marginals"] = {",".join(map(str, t)): v for t, v in sorted(mf.values.items(), key=lambda kv: (len(kv[0]), kv[0]))}
        return (EXIT_OK if m is not None else EXIT_UNSAT), res
    dist = stoch_choice.rationalize_finite(ds)
    if dist is None:
        return EXIT_UNSAT, {"rationalizable": False}
    weights = {",".join(map(str, o)): w for o, w in dist.weights.items() if w}
    return EXIT_OK, {"rationalizable": True, "weights": weights}


def _outcome_json(out: networks.MarketOutcome) -> dict:
    return {"prices": out.prices, "holder": out.holder}


def cmd_walrasian(cfg: RunConfig):
    net = parse_instance(cfg.instance, "network")
    if cfg.exact:
        try:
            out = networks.refine_to_exact(net)
        except networks.NonConvergence as e:
            return EXIT_UNSAT, {"exact": None, "reason": str(e)}
        return EXIT_OK, {"exact": _outcome_json(out), "verified": networks.verify_eps_walrasian(net, out, 0)}
    n = cfg.n or 1
    grid = networks.make_grid(net, n)
    out = networks.solve_eps_walrasian(net, n)
    if out is None:
        return EXIT_UNSAT, {"n": n, "satisfiable": False}
    eps = {i: Fraction(len(net.objects_of[i]), n) for i in net.agents}
    return EXIT_OK, {"n": n, "outcome": _outcome_json(out), "verified": networks.verify_eps_walrasian(net, out, eps, grid)}


def cmd_nash(cfg: RunConfig):
    g = parse_instance(cfg.instance, "game")
    eps = cfg.eps if cfg.eps is not None else Fraction(1, 4)
    plan = graphical_games.plan_discretization(g, eps)
    prof = graphical_games.solve_eps_nash(g, eps, plan)
    if prof is None:
        return EXIT_UNSAT, {"eps": eps, "satisfiable": False}
    ok, gain = graphical_games.verify_eps_nash(g, prof, eps)
    return EXIT_OK, {"eps": eps, "denominators": plan.denom, "profile": prof, "max_gain": gain, "verified": ok}


def _dynamic_market(cfg: RunConfig):
    if cfg.family:
        builders = {"parity_line": dynamic_matching.parity_line, "no_finite_presence": dynamic_matching.no_finite_presence}
        if cfg.family not in builders:
            raise InstanceError(f"unknown dynamic family {cfg.family}")
        return builders[cfg.family](**cfg.params)
    if cfg.instance is None:
        raise InstanceError("dynamic needs an instance file or --family")
    return parse_instance(cfg.instance, "dynamic")


def _chronology_json(ch: dynamic_matching.Chronology) -> dict:
    return {f"{w}@{t}": m for (w, t), m in sorted(ch.assign.items(), key=lambda kv: (kv[0][1], str(kv[0][0])))}


def cmd_dynamic(cfg: RunConfig):
    mkt = _dynamic_market(cfg)
    window = cfg.window or (-3, 3)
    ok, bad = dynamic_matching.check_finite_presence(mkt, (window[0] - 1, window[1]))
    if ok is not True:
        return EXIT_UNSAT, {"finite_presence": ok, "fails_at": bad}
    limit = None if cfg.enumerate else 1
    chs = dynamic_matching.window_chronologies(mkt, window, cfg.boundary, limit)
    if not chs:
        return EXIT_UNSAT, {"window": window, "satisfiable": False}
    rows = [
        {"chronology": _chronology_json(ch), "stable": dynamic_matching.is_stable_subject_to_tenure(mkt, ch, cfg.boundary)[0]}
        for ch in chs
    ]
    return EXIT_OK, {"window": window, "boundary": cfg.boundary, "count": len(rows), "chronologies": rows}


def cmd_szpilrajn(cfg: RunConfig):
    o = parse_instance(cfg.instance, "order")
    fs = orders.encode_extension(o)
    cs = to_cnf(fs)
    labels = [l for l in orders.gt_labels(o.elements) if l in cs]
    if cfg.enumerate:
        ext = [orders.decode_order(m, o.elements) for m in enumerate_models(cs, labels)]
        return EXIT_OK, {"count": len(ext), "extensions": ext}
    m = solve(cs)
    if m is None:  # pragma: no cover - every finite partial order extends
        return EXIT_UNSAT, {"satisfiable": False}
    total = orders.decode_order(m, o.elements)
    return EXIT_OK, {"extension": total, "verified": orders.verify_extension(o, total)}


def _family(cfg: RunConfig) -> harness.InfiniteInstance:
    if not cfg.family:
        raise InstanceError(f"{cfg.command} needs --family (one of {', '.join(sorted(harness.FAMILIES))})")
    try:
        return harness.family(cfg.family, **cfg.params)
    except KeyError as e:
        raise InstanceError(str(e.args[0])) from None
    except TypeError as e:
        raise InstanceError(f"bad parameters for {cfg.family}: {e}") from None


def cmd_ladder(cfg: RunConfig):
    inst = _family(cfg)
    kmax = cfg.kmax or 40
    rep = harness.ladder_solve(inst, kmax, cfg.step or max(1, kmax // 8), track=cfg.prefix)
    res = json.loads(rep.to_json())
    res["first_unsat"] = rep.first_unsat
    return (EXIT_OK if rep.first_unsat is None else EXIT_UNSAT), res


def cmd_prefix_limit(cfg: RunConfig):
    inst = _family(cfg)
    m = cfg.prefix or 4
    kmax = cfg.kmax or 40
    got = harness.prefix_limit(inst, m, kmax, step=cfg.step, all_survivors=cfg.enumerate)
    survivors = got if cfg.enumerate else ([] if got is None else [got])
    res = {
        "variables": [label_str(l) for l in harness.first_variables(inst, m)],
        "exhausted": not survivors,
        "prefixes": [{label_str(l): v for l, v in p.items()} for p in survivors],
    }
    return (EXIT_OK if survivors else EXIT_UNSAT), res


def _encoding(cfg: RunConfig):
    dom = cfg.domain
    if cfg.family:
        return harness.fragment(_family(cfg), cfg.kmax or 40)
    if dom is None:
        raise InstanceError("export-cnf needs --domain or --family")
    inst = parse_instance(cfg.instance, dom, cfg.tolerance)
    if dom == "marriage":
        return matching.encode_stability(inst)
    if dom == "couples":
        return couples.encode_couples(inst)
    if dom == "demand":
        return revealed_pref.encode_rationalization_fragment(inst, revealed_pref.make_grid_config(inst, cfg.n or 2, extra_pairs=cfg.pairs))
    if dom == "stoch":
        return stoch_choice.encode_stoch_fragment(inst, cfg.n or 2, cfg.L)
    if dom == "network":
        return networks.encode_eps_walrasian(inst, networks.make_grid(inst, cfg.n or 1))
    if dom == "game":
        eps = cfg.eps or Fraction(1, 4)
        return graphical_games.encode_eps_nash(inst, eps, graphical_games.plan_discretization(inst, eps))
    if dom == "dynamic":
        return dynamic_matching.encode_dynamic_window(inst, cfg.window or (-3, 3), cfg.boundary)
    return orders.encode_extension(inst)


def cmd_export_cnf(cfg: RunConfig):
    cs = to_cnf(_encoding(cfg))
    text = to_dimacs(cs)
    return EXIT_OK, text


COMMANDS = {
    "match": cmd_match,
    "match-optimal": cmd_match_optimal,
    "manipulate": cmd_manipulate,
    "couples": cmd_couples,
    "garp": cmd_garp,
    "rationalize": cmd_rationalize,
    "arsp": cmd_arsp,
    "stoch-rationalize": cmd_stoch_rationalize,
    "walrasian": cmd_walrasian,
    "nash": cmd_nash,
    "dynamic": cmd_dynamic,
    "szpilrajn": cmd_szpilrajn,
    "ladder": cmd_ladder,
    "prefix-limit": cmd_prefix_limit,
    "export-cnf": cmd_export_cnf,
}

NEEDS_INSTANCE = {"match", "match-optimal", "manipulate", "couples", "garp", "rationalize", "arsp", "stoch-rationalize", "walrasian", "nash", "szpilrajn"}

# caps checked before dispatch
MAX_N, MAX_KMAX, MAX_L = 12, 100_000, 6


def _validate(cfg: RunConfig) -> None:
    if cfg.command in NEEDS_INSTANCE and cfg.instance is None:
        raise InstanceError(f"{cfg.command} needs an instance file")
    if cfg.n is not None and not 0 <= cfg.n <= MAX_N:
        raise InstanceError(f"--n must lie in [0, {MAX_N}]")
    if cfg.kmax is not None and not 0 <= cfg.kmax <= MAX_KMAX:
        raise InstanceError(f"--kmax must lie in [0, {MAX_KMAX}]")
    if not 1 <= cfg.L <= MAX_L:
        raise InstanceError(f"--L must lie in [1, {MAX_L}]")
    if cfg.step is not None and cfg.step <= 0:
        raise InstanceError("--step must be positive")
    if cfg.prefix is not None and not 0 <= cfg.prefix <= harness.MAX_PREFIX:
        raise InstanceError(f"--prefix must lie in [0, {harness.MAX_PREFIX}]")
    if cfg.eps is not None and cfg.eps <= 0:
        raise InstanceError("--eps must be positive")
    if cfg.window is not None and cfg.window[0] > cfg.window[1]:
        raise InstanceError("--window needs T- <= T+")


def run(cfg: RunConfig) -> tuple[int, str]:
    """Dispatch one command; returns the exit status and the primary output text."""
    _validate(cfg)
    status, res = COMMANDS[cfg.command](cfg)
    text = res if isinstance(res, str) else dump(res)
    return status, text


def _param(s: str) -> tuple[str, Any]:
    if "=" not in s:
        raise argparse.ArgumentTypeError(f"expected key=value, got {s!r}")
    k, v = s.split("=", 1)
    try:
        return k, json.loads(v)
    except json.JSONDecodeError:
        return k, v


def _fraction_arg(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational: {s!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="compactness", description="Finite fragments of economic models as SAT instances.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("instance", nargs="?", help="JSON instance file")
        p.add_argument("--family", help="built-in family name")
        p.add_argument("--param", action="append", type=_param, default=[], metavar="KEY=VALUE")
        p.add_argument("--n", type=int, help="grid resolution")
        p.add_argument("--eps", type=_fraction_arg)
        p.add_argument("--L", type=int, default=3, help="longest ranked tuple for stochastic choice")
        p.add_argument("--pairs", type=int, default=0, help="extra rational pairs for the demand grid")
        p.add_argument("--window", type=int, nargs=2, metavar=("T-", "T+"))
        p.add_argument("--kmax", type=int)
        p.add_argument("--step", type=int)
        p.add_argument("--prefix", type=int, metavar="M")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out")
        p.add_argument("--enumerate", action="store_true")
        p.add_argument("--tolerance", type=_fraction_arg)
        p.add_argument("--domain", choices=DOMAINS)
        p.add_argument("--boundary", choices=("open", "closed"), default="open")
        p.add_argument("--man")
        p.add_argument("--misreport", help="comma separated ranked women")
        p.add_argument("--exact", action="store_true", help="refine to exact prices")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(
        command=args.command,
        instance=args.instance,
        family=args.family,
        params=dict(args.param),
        n=args.n,
        eps=args.eps,
        L=args.L,
        pairs=args.pairs,
        window=tuple(args.window) if args.window else None,
        kmax=args.kmax,
        step=args.step,
        prefix=args.prefix,
        seed=args.seed,
        out=args.out,
        enumerate=args.enumerate,
        tolerance=args.tolerance,
        domain=args.domain,
        boundary=args.boundary,
        man=args.man,
        misreport=[w for w in args.misreport.split(",") if w] if args.misreport is not None else None,
        exact=args.exact,
    )
    try:
        status, text = run(cfg)
    except (InstanceError, ValueError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
