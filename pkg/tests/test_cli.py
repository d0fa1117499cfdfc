import json

import pytest

from shiftconv import coefficients as co
from shiftconv import harness as hs
from shiftconv.cli import main


@pytest.fixture(autouse=True)
def private_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("SHIFTCONV_CACHE", str(tmp_path / "cache"))
    return tmp_path / "cache"


def test_gen_round_trip(tmp_path, capsys):
    out = tmp_path / "d3.bin"
    assert main(["gen", "--kind", "divisor", "--d", "3", "--n", "100", "--out", str(out)]) == 0
    t = co.load_table(out)
    assert t.length == 100 and t[4] == 6
    assert main(["gen", "--kind", "random", "--n", "50", "--seed", "4", "--out", str(tmp_path / "r.bin")]) == 0
    assert co.load_table(tmp_path / "r.bin").values.tobytes() == co.gen_random_model(50, 4).values.tobytes()


def test_check_delta(tmp_path):
    out = tmp_path / "delta.json"
    assert main(["check-delta", "--Q", "20", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["passed"] and doc["max_abs_error"] < 1e-5


def test_check_stationary_csv(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["check-stationary", "--phase", "quadratic", "--scales", "1e2,1e3", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].split(",") == hs.STATIONARY_COLUMNS
    assert len(lines) == 3


def test_check_dual(tmp_path):
    out = tmp_path / "dual.json"
    assert main(["check-dual", "--d", "4", "--N", "1000", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["N"] == 1000 and doc["schema_version"] == hs.SCHEMA_VERSION


def test_check_dual_degree_mismatch():
    assert main(["check-dual", "--d", "4", "--N", "1000", "--table", "delta"]) == hs.EXIT_CONFIG


def test_scan_then_report(tmp_path):
    csv_path = tmp_path / "scan.csv"
    assert main(["scan", "--t1", "random", "--t2", "random", "--theta", "0.5",
                 "--grid", "2^10:2^13", "--out", str(csv_path)]) == 0
    rows = hs.read_scan_csv(csv_path)
    assert [r["N"] for r in rows] == [1024, 2048, 4096, 8192]
    rep = tmp_path / "rep.json"
    svg = tmp_path / "plot.svg"
    assert main(["report", str(csv_path), "--out", str(rep), "--svg", str(svg)]) == 0
    doc = json.loads(rep.read_text())
    assert doc["theta"] == pytest.approx(0.5, abs=0.01)
    assert svg.read_text().startswith("<svg")
    only_svg = tmp_path / "only.svg"
    assert main(["report", str(csv_path), "--theta", "0.5", "--out", str(only_svg)]) == 0
    assert only_svg.read_text().startswith("<svg")


def test_run_bad_config_exit_2_no_artifacts(tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text(f"[run]\nout = {tmp_path / 'o' / 'r.json'}\n[delta]\nQQ = 4\n")
    assert main(["run", "--config", str(ini)]) == hs.EXIT_CONFIG
    assert not (tmp_path / "o").exists()


def test_run_delta_suite(tmp_path, capsys):
    ini = tmp_path / "ok.ini"
    ini.write_text("[delta]\nQ = 20\n")
    out = tmp_path / "o" / "r.json"
    assert main(["run", "--config", str(ini), "--suite", "delta", "--out", str(out)]) == 0
    assert "PASS delta_identity" in capsys.readouterr().out
    assert json.loads(out.read_text())["suite"] == "delta"


def test_cache_verbs(tmp_path, private_cache, capsys):
    assert main(["cache", "list"]) == 0
    assert json.loads(capsys.readouterr().out) == []
    hs.cached_table("delta", 200)
    path = private_cache / "delta.bin"
    path.write_bytes(path.read_bytes()[:-1])
    assert main(["cache", "verify"]) == hs.EXIT_RESOURCE
    assert main(["cache", "purge", "--label", "delta"]) == 0
    assert not path.exists()


def test_missing_file_is_resource_error(tmp_path):
    assert main(["report", str(tmp_path / "none.csv")]) == hs.EXIT_RESOURCE
