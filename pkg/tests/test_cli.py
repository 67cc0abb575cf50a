import json
import subprocess
import sys
from fractions import Fraction

import pytest

from compactness.cli import InstanceError, main, parse_instance, parse_rational
from compactness.matching import MarriageMarket

TWO = {"men": {"m1": ["w1", "w2"], "m2": ["w2", "w1"]}, "women": {"w1": ["m2", "m1"], "w2": ["m1", "m2"]}}
VIOLATING = {"observations": [{"prices": [1, 2], "bundle": [1, 2]}, {"prices": [2, 1], "bundle": [2, 1]}]}


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_rationals():
    assert parse_rational("3/5", "x") == Fraction(3, 5)
    assert parse_rational(2, "x") == 2
    with pytest.raises(InstanceError):
        parse_rational("0.3333", "x")
    with pytest.raises(InstanceError):
        parse_rational(0.5, "x")
    assert parse_rational("0.5", "x", tolerance=Fraction(1, 100)) == 0.5


def test_marriage_round_trip(tmp_path):
    mkt = parse_instance(write(tmp_path, "m.json", TWO), "marriage")
    assert isinstance(mkt, MarriageMarket)
    assert mkt.men_prefs == {m: tuple(p) for m, p in TWO["men"].items()}


def test_couples_closure_error_names_couple(tmp_path):
    inst = {
        "couples": {"pair7": {"members": ["a", "b"], "prefs": [["h1", "h2"]]}},
        "hospitals": {"h1": {"capacity": 1, "ranking": ["a"]}, "h2": {"capacity": 1, "ranking": ["b"]}},
    }
    with pytest.raises(InstanceError, match="pair7"):
        parse_instance(write(tmp_path, "c.json", inst), "couples")


def test_decimal_probability_rejected(tmp_path, capsys):
    inst = {"items": ["a", "b"], "entries": [{"menu": ["a", "b"], "choice": "a", "prob": "0.3333"}]}
    path = write(tmp_path, "s.json", inst)
    with pytest.raises(InstanceError):
        parse_instance(path, "stoch")
    code, _, err = run_cli(capsys, "arsp", path)
    assert code == 2 and "0.3333" in err


def test_decimal_probability_with_tolerance(tmp_path, capsys):
    inst = {"items": ["a", "b"], "entries": [{"menu": ["a", "b"], "choice": "a", "prob": "0.6"}]}
    code, out, _ = run_cli(capsys, "arsp", write(tmp_path, "s.json", inst), "--tolerance", "1/1000")
    assert code == 0 and json.loads(out)["arsp"] is True


def test_malformed_json_reports_position(tmp_path):
    with pytest.raises(InstanceError, match="line 2"):
        parse_instance(write(tmp_path, "bad.json", '{"men": {},\n "women": [}'), "marriage")


def test_missing_field_reports_path(tmp_path):
    with pytest.raises(InstanceError, match="observations\\[0\\]"):
        parse_instance(write(tmp_path, "d.json", {"observations": [{"prices": [1]}]}), "demand")


def test_network_trade_objects(tmp_path):
    inst = {
        "trades": [{"object": "o", "seller": "s", "buyer": "b"}],
        "utilities": {"s": {"": 0, "o": 0}, "b": {"": 0, "o": 10}},
    }
    net = parse_instance(write(tmp_path, "n.json", inst), "network")
    assert net.objects == ("o",) and (net.trade["o"].seller, net.trade["o"].buyer) == ("s", "b")


def test_match_enumerate(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "match", write(tmp_path, "m.json", TWO), "--enumerate")
    res = json.loads(out)
    assert code == 0 and res["count"] == 2 and len(res["stable_matchings"]) == 2


def test_garp_violation_exit_one(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "garp", write(tmp_path, "d.json", VIOLATING))
    res = json.loads(out)
    assert code == 1 and sorted(res["cycle"]) == [0, 1]


def test_export_cnf_header(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "export-cnf", write(tmp_path, "m.json", TWO), "--domain", "marriage")
    assert code == 0
    lines = out.splitlines()
    header = next(l for l in lines if l.startswith("p cnf"))
    nvars, nclauses = map(int, header.split()[2:])
    clauses = [l for l in lines if l and not l.startswith(("c", "p"))]
    assert len(clauses) == nclauses
    assert max(abs(int(x)) for c in clauses for x in c.split()) <= nvars
    assert all(c.split()[-1] == "0" for c in clauses)


def test_output_is_deterministic(tmp_path, capsys):
    path = write(tmp_path, "m.json", TWO)
    outs = {run_cli(capsys, "match", path, "--enumerate")[1] for _ in range(3)}
    assert len(outs) == 1


def test_out_file(tmp_path, capsys):
    target = tmp_path / "res.json"
    code, out, _ = run_cli(capsys, "garp", write(tmp_path, "d.json", VIOLATING), "--out", str(target))
    assert code == 1 and out == "" and json.loads(target.read_text())["garp"] is False


def test_family_commands(capsys):
    code, out, _ = run_cli(capsys, "prefix-limit", "--family", "contradiction", "--prefix", "3", "--kmax", "12")
    assert code == 1
    code, out, _ = run_cli(capsys, "ladder", "--family", "disjoint_pairs", "--kmax", "12")
    assert code == 0 and json.loads(out)["instance"]
    code, out, _ = run_cli(capsys, "dynamic", "--family", "parity_line", "--window", "-3", "3", "--enumerate")
    assert code == 0 and json.loads(out)["count"] == 2


def test_usage_errors(tmp_path, capsys):
    assert run_cli(capsys, "garp")[0] == 2  # no instance
    assert run_cli(capsys, "ladder", "--family", "szpilrajn", "--kmax", "-1")[0] == 2
    with pytest.raises(SystemExit) as e:
        main(["no-such-command"])
    assert e.value.code == 2


def test_module_entry_point(tmp_path):
    path = write(tmp_path, "m.json", TWO)
    r = subprocess.run([sys.executable, "-m", "compactness", "match", path], capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["stable"] is True
