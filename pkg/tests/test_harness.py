import json

import pytest

from shiftconv import coefficients as co
from shiftconv import harness as hs
from shiftconv.errors import ConfigError, DataIntegrityError


@pytest.fixture(autouse=True)
def private_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("SHIFTCONV_CACHE", str(tmp_path / "cache"))
    return tmp_path / "cache"


def small_config(tmp_path, **sections):
    base = {
        "run": {"out": str(tmp_path / "out" / "report.json")},
        "delta": {"Q": "20"},
        "stationary": {"phases": "quadratic,log", "scales": "1e2,1e3"},
        "dual": {"N": "1000"},
        "scan": {"grid": "2^10:2^13", "t1": "random", "t2": "random"},
        "coeffs": {"N": "2000"},
    }
    for name, values in sections.items():
        base.setdefault(name, {}).update(values)
    return hs.RunConfig.from_mapping(base)


def test_parse_grid_forms():
    assert hs.parse_grid("2^3:2^6") == [8, 16, 32, 64]
    assert hs.parse_grid("1e3, 1e4,100000") == [1000, 10000, 100000]
    with pytest.raises(ConfigError):
        hs.parse_grid("8:64")


def test_defaults_match_schema():
    cfg = hs.RunConfig.from_mapping({})
    assert cfg.suite == "all" and cfg.threads == 1 and cfg.out == "report.json"
    assert cfg.parameters["scan"]["grid"] == [2**k for k in range(14, 21)]
    assert cfg.parameters["delta"]["Q"] == 50
    assert cfg.suites() == list(hs.SUITES)


@pytest.mark.parametrize("sections,needle", [
    ({"delta": {"Qq": "3"}}, "unknown key"),
    ({"bogus": {}}, "unknown section"),
    ({"delta": {"Q": "fifty"}}, "cannot parse"),
    ({"delta": {"Q": "1"}}, "out of range"),
    ({"run": {"suite": "nope"}}, "out of range"),
    ({"stationary": {"phases": "log,cubic"}}, "out of range"),
])
def test_config_rejections(sections, needle):
    with pytest.raises(ConfigError, match=needle):
        hs.RunConfig.from_mapping(sections)


def test_config_file_case_sensitive(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[run]\nsuite = delta\n[delta]\nQ = 30\n[dual]\nN = 2^10:2^11\n")
    cfg = hs.RunConfig.from_file(path)
    assert cfg.suites() == ["delta"]
    assert cfg.parameters["delta"]["Q"] == 30
    assert cfg.parameters["dual"]["N"] == [1024, 2048]
    with pytest.raises(ConfigError):
        hs.RunConfig.from_file(tmp_path / "missing.ini")


def test_atomic_write_leaves_no_temp(tmp_path):
    target = tmp_path / "a" / "b.txt"
    hs.atomic_write(target, "x")
    hs.atomic_write(target, b"yz")
    assert target.read_bytes() == b"yz"
    assert [p.name for p in target.parent.iterdir()] == ["b.txt"]


def test_report_json_is_plain():
    rep = hs.RunReport("delta", {"delta": {"Q": 3}},
                       [hs.Check("c", float("nan"), 1e-5, False)], 0.1, {})
    doc = json.loads(rep.to_json())
    assert doc["schema_version"] == hs.SCHEMA_VERSION
    assert doc["checks"][0]["measured"] == "nan"
    assert rep.exit_code == hs.EXIT_FAIL


def test_delta_suite_writes_report(tmp_path):
    cfg = small_config(tmp_path, run={"suite": "delta"})
    rep = hs.run_suite(cfg)
    assert rep.exit_code == hs.EXIT_OK
    doc = json.loads((tmp_path / "out" / "report.json").read_text())
    assert [c["name"] for c in doc["checks"]] == ["delta_identity", "delta_literal_a_sum"]
    assert doc["parameters"] == {"delta": {"Q": 20, "range": 0}}


def test_all_suites_each_check_once(tmp_path):
    rep = hs.run_suite(small_config(tmp_path, run={"threads": "2"}), write=False)
    names = [c.name for c in rep.checks]
    assert len(names) == len(set(names))
    assert names == ["delta_identity", "delta_literal_a_sum", "stationary_slope_quadratic",
                     "stationary_slope_log", "dual_rel_err_monotone", "scan_slope_one_sided",
                     "tau_first_values", "hecke_multiplicativity", "divisor_tau3_of_4",
                     "cache_round_trip"]
    # dual and scan are measurements whose thresholds need the full grids
    for c in rep.checks:
        if c.name not in ("dual_rel_err_monotone", "scan_slope_one_sided"):
            assert c.passed, c
    assert not (tmp_path / "out").exists()


def test_artifacts_deterministic(tmp_path):
    cfg = small_config(tmp_path, run={"suite": "scan"})
    hs.run_suite(cfg)
    first = (tmp_path / "out" / "scan.csv").read_bytes()
    cfg2 = small_config(tmp_path, run={"suite": "scan", "out": str(tmp_path / "o2" / "r.json")})
    rep = hs.run_suite(cfg2)
    assert (tmp_path / "o2" / "scan.csv").read_bytes() == first
    key = str(tmp_path / "o2" / "scan.csv")
    assert rep.artifacts[key] == f"{co.fnv1a64(first):016x}"


def test_suite_error_becomes_failed_check(tmp_path):
    cfg = small_config(tmp_path, run={"suite": "scan"}, scan={"t1": "nonsense"})
    rep = hs.run_suite(cfg, write=False)
    assert rep.exit_code == hs.EXIT_FAIL
    (check,) = rep.checks
    assert check.name == "scan_error" and "nonsense" in check.error


def test_cache_list_verify_purge(private_cache):
    assert hs.cache_manager("list") == []
    t = hs.cached_table("delta", 500)
    assert t.length == 500
    again = hs.cached_table("delta", 300)
    assert again.length == 500
    listing = hs.cache_manager("list")
    assert listing[0]["label"] == "delta" and listing[0]["length"] == 500
    assert listing[0]["kind"] == "gl2_cusp"
    assert hs.cache_manager("verify") == [{"label": "delta", "ok": True}]
    path = private_cache / "delta.bin"
    path.write_bytes(path.read_bytes()[:-1])
    with pytest.raises(DataIntegrityError, match="delta.bin"):
        hs.cache_manager("verify")
    assert hs.cache_manager("purge") == ["delta"]
    assert hs.cache_manager("list") == []


def test_cached_random_tables_keyed_by_seed(private_cache):
    a = hs.cached_table("random", 100, seed=1)
    b = hs.cached_table("random", 100, seed=2)
    assert (private_cache / "random-s1.bin").exists()
    assert a.values.tobytes() != b.values.tobytes()


def test_build_table_names():
    assert hs.build_table("sym2", 50).degree == 3
    assert hs.build_table("divisor3", 50)[4] == 6
    assert hs.build_table("ones", 10)[10] == 1
    with pytest.raises(ConfigError):
        hs.build_table("zeta", 10)


def test_stationary_rows_error_shrinks():
    rows = hs.stationary_rows("quadratic", [1e2, 1e3, 1e4])
    errs = [r["rel_err0"] for r in rows]
    assert errs[0] > errs[1] > errs[2]
    assert all(r["rel_err1"] <= r["rel_err0"] for r in rows)


def test_scan_report_and_svg():
    rows = [{"N": 2**k, "H": 2 ** (k // 2), "B_sharp": 2.0**k, "B_smooth": 2.0 ** (0.5 * k),
             "log_slope_partial": 0.5} for k in range(10, 15)]
    rep = hs.scan_report(rows, 0.5)
    assert rep["fit_smooth"]["slope"] == pytest.approx(0.5)
    assert rep["fit_sharp"]["slope"] == pytest.approx(1.0)
    svg = hs.svg_loglog(rows, 0.5)
    assert svg.startswith("<svg") and svg.count("<circle") == 5
