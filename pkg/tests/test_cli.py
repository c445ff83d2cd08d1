import json

from shadowlab.cli import (
    EXIT_CONFIG,
    EXIT_FAIL,
    EXIT_OK,
    bundled_scenarios_dir,
    main,
    run_scenario,
    run_suite,
)
from shadowlab.reporting import load_report, report_body_bytes


def write_scenario(tmp_path, name, payload):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(payload))
    return path


SMALL_SHADOW = {
    "name": "small-shadow",
    "experiment": "shadow",
    "family": {"kind": "doubling"},
    "parameters": {"epsilon": 0.1, "noise": 0.049, "horizon": 32, "seeds": 3, "seed": 5},
}


def test_run_bundled_doubling_shadow(tmp_path):
    scenario = bundled_scenarios_dir() / "doubling-shadow.json"
    code = run_scenario(scenario, tmp_path, quiet=True)
    assert code == EXIT_OK
    report = load_report(tmp_path / "doubling-shadow.report.json")["report"]
    assert report["verdict"] is True
    assert report["max_error_overall"] < 0.1
    assert (tmp_path / "doubling-shadow.errors.csv").exists()


def test_malformed_json_exits_2(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert run_scenario(path, tmp_path, quiet=True) == EXIT_CONFIG


def test_unknown_experiment_exits_2(tmp_path):
    path = write_scenario(tmp_path, "x", {"name": "x", "experiment": "nope"})
    assert run_scenario(path, tmp_path, quiet=True) == EXIT_CONFIG


def test_missing_parameter_exits_2(tmp_path):
    payload = {
        "name": "y",
        "experiment": "shadow",
        "family": {"kind": "doubling"},
        "parameters": {"noise": 0.01},
    }
    path = write_scenario(tmp_path, "y", payload)
    assert run_scenario(path, tmp_path, quiet=True) == EXIT_CONFIG


def test_epsilon_too_large_exits_1(tmp_path):
    payload = {
        "name": "big-eps",
        "experiment": "shadow",
        "family": {"kind": "doubling"},
        "parameters": {"epsilon": 0.2, "noise": 0.01, "horizon": 8, "seeds": 1},
    }
    path = write_scenario(tmp_path, "big-eps", payload)
    assert run_scenario(path, tmp_path, quiet=True) == EXIT_FAIL


def test_suite_empty_directory(tmp_path):
    out = tmp_path / "out"
    empty = tmp_path / "empty"
    empty.mkdir()
    assert run_suite(empty, out, quiet=True) == EXIT_OK


def test_suite_expect_fail_inversion(tmp_path):
    failing = {
        "name": "control",
        "experiment": "shadow",
        "expect_fail": True,
        "family": {"kind": "barely_expanding"},
        "parameters": {"epsilon": 0.1, "noise": 0.02, "horizon": 16, "seeds": 1},
    }
    write_scenario(tmp_path, "control", failing)
    assert run_suite(tmp_path, tmp_path / "out", quiet=True) == EXIT_OK
    # An unexpected pass flips the suite to failure.
    passing = dict(SMALL_SHADOW)
    passing["expect_fail"] = True
    write_scenario(tmp_path, "unexpected", passing)
    assert run_suite(tmp_path, tmp_path / "out", quiet=True) == EXIT_FAIL


def test_reports_byte_identical_across_runs(tmp_path):
    path = write_scenario(tmp_path, "small-shadow", SMALL_SHADOW)
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert run_scenario(path, out1, quiet=True) == EXIT_OK
    assert run_scenario(path, out2, quiet=True) == EXIT_OK
    b1 = report_body_bytes(load_report(out1 / "small-shadow.report.json"))
    b2 = report_body_bytes(load_report(out2 / "small-shadow.report.json"))
    assert b1 == b2
    assert (out1 / "small-shadow.errors.csv").read_bytes() == (
        out2 / "small-shadow.errors.csv"
    ).read_bytes()


def test_seed_override_changes_report(tmp_path):
    path = write_scenario(tmp_path, "small-shadow", SMALL_SHADOW)
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    run_scenario(path, out1, quiet=True)
    run_scenario(path, out2, seed=99, quiet=True)
    b1 = report_body_bytes(load_report(out1 / "small-shadow.report.json"))
    b2 = report_body_bytes(load_report(out2 / "small-shadow.report.json"))
    assert b1 != b2


def test_horizon_override(tmp_path):
    path = write_scenario(tmp_path, "small-shadow", SMALL_SHADOW)
    out = tmp_path / "r"
    run_scenario(path, out, horizon=16, quiet=True)
    report = load_report(out / "small-shadow.report.json")["report"]
    assert report["horizon"] == 16


def test_main_entry_point(tmp_path):
    path = write_scenario(tmp_path, "small-shadow", SMALL_SHADOW)
    code = main(["run", str(path), "--out", str(tmp_path / "o"), "--quiet"])
    assert code == EXIT_OK
    code = main(["suite", str(tmp_path), "--out", str(tmp_path / "o2"), "--quiet"])
    assert code == EXIT_OK


def test_bundled_suite_all_pass(tmp_path):
    assert run_suite(bundled_scenarios_dir(), tmp_path, quiet=True) == EXIT_OK
