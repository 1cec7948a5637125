"""Command-line reports: shape, determinism, exit codes, CSV artifacts."""

import json
import subprocess
import sys

import pytest

CLI = [sys.executable, "-m", "sparsecycles.cli"]
REPORT_KEYS = ["command", "note", "version", "results", "passed", "timing"]


def run_cli(args, cwd, timeout=300):
    return subprocess.run(
        CLI + args, cwd=cwd, capture_output=True, text=True, timeout=timeout
    )


def report_of(proc):
    return json.loads(proc.stdout)


def test_bounds_report(tmp_path):
    proc = run_cli(["bounds", "--m", "10", "--out", "o"], tmp_path)
    assert proc.returncode == 0
    rep = report_of(proc)
    assert list(rep) == REPORT_KEYS
    assert rep["passed"] is True
    assert rep["command"] == "bounds --m 10 --out o"
    res = rep["results"]
    assert res["m"] == 10
    assert res["simplified"]["value"] == 12.0
    assert res["simplified"]["exact"] == "12"
    assert res["refined"]["value"] == 12.0
    assert res["refined"]["exact"] == "12"
    assert res["optimal_r"] == 5
    assert res["cycles_at_split"]["value"] == 12
    assert res["cycles_at_split"]["method"] == "certificate"
    # the report file holds exactly what was printed
    assert (tmp_path / "o" / "report.json").read_text() == proc.stdout


def test_bounds_fractional_simplified(tmp_path):
    proc = run_cli(["bounds", "--m", "9", "--out", "o"], tmp_path)
    assert proc.returncode == 0
    res = report_of(proc)["results"]
    assert res["simplified"]["exact"] == "11/2"
    assert res["refined"]["exact"] == "10"
    assert res["cycles_at_split"]["value"] >= 10


def test_certify_small_system(tmp_path):
    proc = run_cli(["certify", "--n", "1", "--r", "0", "--out", "o"], tmp_path)
    assert proc.returncode == 0
    rep = report_of(proc)
    assert rep["passed"] is True
    cert = rep["results"]["certificate"]
    assert (cert["n"], cert["r"]) == (1, 0)
    assert cert["count"] == {"value": 4, "method": "certificate"}
    assert rep["results"]["expected_count"]["value"] == 4
    assert len(cert["annuli"]) == 2
    for table in cert["annuli"]:
        assert [e["position"] for e in table["entries"]] == [-1, 0, 1]
        assert table["sign_changes"]["value"] == 2
    census = cert["method_census"]
    assert sum(census.values()) == 6


def test_identical_runs_differ_only_in_timing(tmp_path):
    args = ["certify", "--n", "1", "--r", "0", "--out", "same"]
    first = run_cli(args, tmp_path)
    second = run_cli(args, tmp_path)
    assert first.returncode == second.returncode == 0
    a, b = report_of(first), report_of(second)
    a.pop("timing")
    b.pop("timing")
    # key order and every byte of the remaining payload must agree
    assert json.dumps(a, indent=2) == json.dumps(b, indent=2)


def test_table_single_row(tmp_path):
    proc = run_cli(["table", "--rows", "5", "--out", "o"], tmp_path)
    assert proc.returncode == 0
    res = report_of(proc)["results"]
    assert len(res["rows"]) == 1
    row = res["rows"][0]
    assert (row["m"], row["n"], row["r"]) == (5, 1, 0)
    assert row["count"]["value"] == 4
    assert row["target"] == 4
    assert row["passed"] is True
    beyond = res["beyond_desk_scale"]
    assert [b["m"] for b in beyond] == list(range(11, 17))
    for b in beyond:
        assert b["cycles_at_split"]["value"] >= b["refined"]["value"]


def test_table_rejects_rows_outside_range(tmp_path):
    proc = run_cli(["table", "--rows", "3,5", "--out", "o"], tmp_path)
    assert proc.returncode == 1
    assert "rows outside 4..10" in proc.stderr


def test_malformed_comma_lists_fail_cleanly(tmp_path):
    # bad entries in comma-list flags get a one-line message, not a traceback
    proc = run_cli(["table", "--rows", "banana", "--out", "o"], tmp_path)
    assert proc.returncode == 1
    assert proc.stdout == ""
    assert "--rows expects a comma list of integers" in proc.stderr
    assert "Traceback" not in proc.stderr
    proc = run_cli(
        ["verify", "--n", "1", "--r", "0", "--eps-scan", "0.1,banana", "--out", "o"],
        tmp_path,
    )
    assert proc.returncode == 1
    assert proc.stdout == ""
    assert "--eps-scan expects a comma list of numbers" in proc.stderr
    assert "Traceback" not in proc.stderr


def test_argument_validation_exits_two(tmp_path):
    for args in (
        ["certify", "--n", "0", "--r", "0"],
        ["certify", "--n", "1", "--r", "-1"],
        ["bounds", "--m", "8"],
        ["dump-ovals", "--r", "0", "--levels", "0"],
        ["hopf", "--family", "m6"],
    ):
        proc = run_cli(args, tmp_path)
        assert proc.returncode == 2, args
        assert proc.stdout == ""


def test_certify_failure_is_reported_not_raised(tmp_path):
    proc = run_cli(
        ["certify", "--n", "3", "--r", "2", "--m-cap", "2", "--out", "o"],
        tmp_path,
    )
    assert proc.returncode == 1
    rep = report_of(proc)
    assert rep["passed"] is False
    assert rep["results"]["error"]["type"] == "ExponentCapExceeded"


def test_dump_ovals_artifacts(tmp_path):
    proc = run_cli(
        ["dump-ovals", "--r", "0", "--levels", "2", "--out", "o"], tmp_path
    )
    assert proc.returncode == 0
    rep = report_of(proc)
    assert rep["passed"] is True
    files = rep["results"]["ovals"]
    assert len(files) == 4  # two annuli, two levels each
    for entry in files:
        path = tmp_path / "o" / entry["file"]
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# center=(")
        assert lines[1] == "x,y"
        assert len(lines) - 2 == entry["vertices"]
        xs, ys = zip(*(map(float, ln.split(",")) for ln in lines[2:]))
        # vertices approach the exactly solved amplitude from inside
        ymax = max(abs(y) for y in ys)
        alpha = entry["alpha"]["value"]
        assert ymax <= alpha + 1e-12
        assert alpha - ymax <= 1e-4


def test_dump_ovals_annulus_filter(tmp_path):
    proc = run_cli(
        ["dump-ovals", "--r", "0", "--levels", "1", "--annulus", "2",
         "--out", "o"],
        tmp_path,
    )
    assert proc.returncode == 0
    files = report_of(proc)["results"]["ovals"]
    assert len(files) == 1
    assert files[0]["annulus"] == 2
