import json
from pathlib import Path

import pytest

from jgrekit.cli import main

FIXTURES = Path(__file__).parent / "fixtures"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_analyze_json(capsys):
    code, out, _ = run(capsys, "analyze")
    assert code == 1
    doc = json.loads(out)
    assert len(doc["findings"]) == 31
    assert doc["max_depth"] == 4 and doc["summary"]["services"] == 21


def test_analyze_table_matches_golden(capsys):
    code, out, _ = run(capsys, "analyze", "--format", "table")
    assert code == 1
    assert out == (FIXTURES / "golden_table.txt").read_text(encoding="utf-8")


def test_analyze_csv_to_file(capsys, tmp_path):
    dest = tmp_path / "r.csv"
    code, out, _ = run(capsys, "analyze", "--format", "csv", "--out", str(dest))
    assert code == 1 and out == ""
    assert len(dest.read_text().splitlines()) == 32


def test_analyze_clean_corpus_exits_zero(capsys):
    code, out, _ = run(capsys, "analyze", "--corpus", str(FIXTURES / "hierarchy.jgr"))
    assert code == 0
    assert json.loads(out)["findings"] == []


def test_logs_stay_off_stdout(capsys):
    code, out, err = run(capsys, "analyze", "--format", "csv", "-v")
    assert "INFO" in err and "INFO" not in out


def test_validate(capsys):
    code, out, _ = run(capsys, "validate")
    assert (code, out) == (0, "0 diagnostics\n")
    code, out, _ = run(capsys, "validate", "--corpus", str(FIXTURES / "empty.dat"))
    assert (code, out) == (0, "0 diagnostics\n")


def test_simulate_abstract(capsys):
    code, out, _ = run(capsys, "simulate", "--capacity", "10", "--calls", "20")
    lines = out.splitlines()
    assert code == 1
    summary = json.loads(lines[-1])
    assert summary["outcome"]["outcome"] == "Reboot"
    assert sum(json.loads(l)["kind"] == "JgrCreated" for l in lines[:-1]) == 10


def test_simulate_scenario_file(capsys, tmp_path):
    sc = tmp_path / "s.json"
    sc.write_text(
        json.dumps(
            {
                "config": {"jgr_capacity": 100, "policy": "binder-proxy:50"},
                "script": {"strategy": {"kind": "Simple", "iface": "audio.startWatchingRoutes", "n_calls": 200}},
            }
        )
    )
    trace = tmp_path / "t.jsonl"
    code, out, _ = run(capsys, "simulate", "--scenario", str(sc), "--out", str(trace))
    assert code == 0
    assert json.loads(out)["outcome"]["outcome"] == "AppKilled"
    assert trace.read_text().count("\n") > 100


def test_simulate_against_corpus(capsys):
    code, out, _ = run(capsys, "simulate", "--corpus", "src/jgrekit/data/corpus", "--capacity", "30")
    assert code == 1
    assert json.loads(out.splitlines()[-1])["outcome"]["outcome"] == "Reboot"


def test_simulate_is_deterministic(capsys):
    a = run(capsys, "simulate", "--capacity", "40", "--policy", "binder-proxy:20:buggy", "--attack", "ServiceBased")
    b = run(capsys, "simulate", "--capacity", "40", "--policy", "binder-proxy:20:buggy", "--attack", "ServiceBased")
    assert a == b


def test_verify_table(capsys):
    code, out, _ = run(capsys, "verify", "--format", "table")
    assert code == 1
    assert out.splitlines()[-1] == "29/31 verified"


def test_verify_under_purger(capsys):
    code, out, _ = run(capsys, "verify", "--capacity", "100", "--policy", "purger:50")
    assert code == 0
    assert not any(r["verified"] for r in json.loads(out)["results"])


def test_matrix(capsys):
    code, out, _ = run(capsys, "matrix", "--capacity", "100", "--format", "json")
    assert code == 0
    m = json.loads(out)
    assert m["None"] == {"Simple": "Reboot", "ServiceBased": "Reboot", "OneBinder": "Reboot"}
    assert m["BinderProxyLimit(50)"]["OneBinder"] == "Reboot"
    assert "Reboot" not in m["Purger(50)"].values()


def test_matrix_db_mode_agrees(capsys):
    _, abstract, _ = run(capsys, "matrix", "--capacity", "40")
    _, db_mode, _ = run(capsys, "matrix", "--capacity", "40", "--corpus", "src/jgrekit/data/corpus")
    assert abstract == db_mode


def test_bench(capsys):
    code, out, _ = run(capsys, "bench", "--grid", "1,10", "--trials", "1")
    assert code == 0
    assert out.splitlines()[0] == "Defense,1,10"


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["nope"],
        ["analyze", "--format", "xml"],
        ["analyze", "--corpus", "/no/such/dir"],
        ["analyze", "--max-depth", "0"],
        ["simulate", "--policy", "bogus"],
        ["simulate", "--corpus", "src/jgrekit/data/corpus", "--iface", "nope.nope"],
        ["bench", "--grid", "x"],
        ["matrix", "--format", "xml"],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    assert main(argv) == 2


def test_syntax_error_exits_2(capsys, tmp_path):
    bad = tmp_path / "bad.jgr"
    bad.write_text("managed class {")
    code, out, err = run(capsys, "analyze", "--corpus", str(bad))
    assert code == 2 and out == ""
    assert "bad.jgr:1" in err
