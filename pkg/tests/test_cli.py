import json
import subprocess
import sys

import pytest

from dsaudit.cli import main
from dsaudit.ingest import parse_rules
from dsaudit.sat import parse_dimacs
from helpers import FIXTURES

LOAN = str(FIXTURES / "loan.rules")
BOOL = str(FIXTURES / "boolean.rules")


def run(*args):
    return main(list(args))


def test_audit_exit_codes(tmp_path):
    out = tmp_path / "r.jsonl"
    assert run("audit", "--input", LOAN, "--out", str(out)) == 2
    rep = json.loads(out.read_text())
    assert [p["pair"] for p in rep["overlaps"]] == [[1, 4], [2, 4]]
    assert run("audit", "--input", BOOL, "--out", str(out)) == 2


def test_tree_input_is_clean(tmp_path):
    tree = {"root": {"feature": "x", "op": ">", "threshold": 1, "left": {"leaf": "a"}, "right": {"leaf": "b"}}}
    p = tmp_path / "t.json"
    p.write_text(json.dumps(tree))
    assert run("audit", "--input", str(p), "--kind", "tree", "--out", str(tmp_path / "o")) == 0


def test_input_errors(tmp_path, capsys):
    assert run("audit", "--input", str(tmp_path / "missing.rules")) == 1
    bad = tmp_path / "bad.rules"
    bad.write_text("rulefile v1\nfeature x numeric\nrule x >> 1 => 1\ndefault 0\n")
    assert run("audit", "--input", str(bad)) == 1
    assert "line 3, col 9" in capsys.readouterr().err
    assert run("audit", "--nope") == 1
    assert run("audit", "--input", LOAN, "--jobs", "0") == 1


def test_timeout_exit(tmp_path):
    assert run("audit", "--input", LOAN, "--budget-secs", "0.000001", "--out", str(tmp_path / "o")) == 3


def test_env_override(tmp_path, monkeypatch):
    out = tmp_path / "r.csv"
    monkeypatch.setenv("DSAUDIT_FORMAT", "csv")
    assert run("audit", "--input", LOAN, "--out", str(out)) == 2
    assert out.read_text().startswith("model,NR,")


def test_explain(tmp_path, capsysbinary):
    rules = tmp_path / "m.rules"
    rules.write_text(
        "rulefile v1\nfeature x1 categorical\nfeature x2 categorical\n"
        "constraint x1 = a -> x2 != b\nrule x1 = a => 1\nrule x2 = b => 0\ndefault none\n"
    )
    assert run("explain", "--input", str(rules), "--point", "x1=a,x2=c") == 0
    assert capsysbinary.readouterr().out.decode().startswith("AXp: x1\n")
    assert run("explain", "--input", str(rules), "--point", '{"x1": "z", "x2": "z"}', "--format", "json") == 0
    assert json.loads(capsysbinary.readouterr().out)["status"] == "refused"
    assert run("explain", "--input", str(rules), "--point", "x1=a") == 1


def test_explain_overlap_refusal(capsysbinary):
    assert run("explain", "--input", BOOL, "--point", "a=1,b=1,c=1,d=1,f=1,w=0", "--type", "WAXp") == 0
    out = capsysbinary.readouterr().out.decode()
    assert "negative overlap" in out and "rules 1 and 3" in out


def test_simplify(tmp_path):
    out, log = tmp_path / "s.rules", tmp_path / "f.jsonl"
    assert run("simplify", "--input", BOOL, "--out", str(out), "--findings", str(log)) == 0
    bodies = [[str(l) for l in r.body] for r in parse_rules(out).ds.rules]
    assert bodies == [["a = 1"], ["c = 1", "d = 1"]]
    kinds = [json.loads(l)["kind"] for l in log.read_text().splitlines()]
    assert kinds == ["global-literal", "redundant-rule", "local-literal"]


def test_export_cnf(tmp_path):
    out = tmp_path / "b.cnf"
    assert run("export-cnf", "--input", LOAN, "--out", str(out)) == 0
    f = parse_dimacs(out.read_text())
    assert "atom 1 salary > 0" in f.comments


def test_aggregate(tmp_path):
    d = tmp_path / "reports"
    d.mkdir()
    for k, fixture in enumerate((LOAN, BOOL)):
        run("audit", "--input", fixture, "--tag", "m", "--out", str(d / f"{k}.jsonl"))
    run("audit", "--input", LOAN, "--tag", "other", "--format", "csv", "--out", str(d / "x.csv"))
    out = tmp_path / "agg.csv"
    assert run("aggregate", "--input", str(d), "--out", str(out)) == 0
    lines = out.read_text().splitlines()
    assert [l.split(",")[:3] for l in lines[1:]] == [["m", "2", "0"], ["other", "1", "0"]]


@pytest.mark.slow
def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "dsaudit.cli", "audit", "--input", LOAN, "--out", str(tmp_path / "o")])
    assert res.returncode == 2
