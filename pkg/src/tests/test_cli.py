"""
Reusable test functions for the sigma_lab CLI: exit codes, written reports, determinism.

Each test calls src.sigma_lab.main() in-process with a temporary output directory.

Result format: each test returns a dict with "passed", "message", and optional "details".
"""

from __future__ import annotations

import contextlib
import io
import json
import os
import tempfile
from fractions import Fraction
from typing import Any
from unittest import mock

from src import sigma_lab
from src.tests.oracles import _result
from src.utils.validate import EXIT_CAP, EXIT_INVARIANT, EXIT_OK, EXIT_USAGE, InvariantViolation, compare_reports

PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", ".."))
SCENARIO_DIR = os.path.join(PROJECT_ROOT, "data", "scenarios")


def _run(argv: list[str]) -> tuple[int, str]:
    """main(argv) with stdout captured; SystemExit is turned into its code."""
    buffer = io.StringIO()
    with contextlib.redirect_stdout(buffer):
        try:
            code = sigma_lab.main(argv)
        except SystemExit as e:
            code = e.code
    return code, buffer.getvalue()


def _load_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def _read_bytes(directory: str) -> dict[str, bytes]:
    out = {}
    for name in sorted(os.listdir(directory)):
        with open(os.path.join(directory, name), "rb") as f:
            out[name] = f.read()
    return out


def _scenario(name: str) -> str:
    return os.path.join(SCENARIO_DIR, name)


# -----------------------------------------------------------------------------
# Exit codes
# -----------------------------------------------------------------------------

def test_exit_codes() -> list[dict[str, Any]]:
    results = []
    with tempfile.TemporaryDirectory() as tmp:
        code, _ = _run(["demo", "counterexample", "--n-max", "2", "--out", tmp, "--quiet"])
        results.append(_result(code == EXIT_OK, "demo counterexample --n-max 2 exits 0", code=code))

        code, out = _run(["demo", "counterexample", "--n-max", "15", "--out", tmp, "--quiet"])
        results.append(_result(code == EXIT_CAP and "Error:" in out, "--n-max 15 exceeds the demo cap (exit 3)", code=code))

        code, _ = _run(["analyze", "--scenario", os.path.join(tmp, "missing.json"), "--out", tmp, "--quiet"])
        results.append(_result(code == EXIT_USAGE, "missing scenario file exits 1", code=code))

        broken = os.path.join(tmp, "broken.json")
        with open(broken, "w", encoding="utf-8") as f:
            f.write("{\"sequence\": ")
        code, _ = _run(["analyze", "--scenario", broken, "--out", tmp, "--quiet"])
        results.append(_result(code == EXIT_USAGE, "malformed scenario JSON exits 1", code=code))

        with contextlib.redirect_stderr(io.StringIO()):
            code, _ = _run(["demo", "counterexample", "--out", tmp])
        results.append(_result(code == EXIT_USAGE, "missing required --n-max exits 1", code=code))

        with mock.patch("src.sigma_lab.run_analyses", side_effect=InvariantViolation("adjointness failed")):
            code, out = _run(["analyze", "--scenario", _scenario("martingale.json"), "--out", tmp, "--quiet"])
        results.append(_result(code == EXIT_INVARIANT and "adjointness" in out, "invariant violation exits 2", code=code))
    return results


# -----------------------------------------------------------------------------
# Demo outputs
# -----------------------------------------------------------------------------

def test_demo_counterexample_report() -> list[dict[str, Any]]:
    with tempfile.TemporaryDirectory() as tmp:
        code, _ = _run(["demo", "counterexample", "--n-max", "3", "--out", tmp, "--quiet", "--formats", "json,csv"])
        report = _load_json(os.path.join(tmp, "counterexample.json"))
        files = sorted(os.listdir(tmp))
    blocks = report["blocks"]
    return [
        _result(code == EXIT_OK, "demo exits 0"),
        _result(blocks[0]["values"] == ["1", "2/3", "2/9"], "block n = 2 atom values 1, 2/3, 2/9", actual=blocks[0]["values"]),
        _result(blocks[0]["l1"] == "5/18", "block n = 2 L1 distance 5/18", actual=blocks[0]["l1"]),
        _result(blocks[1]["values"][2] == "2/17", "block n = 3 C value 2/17"),
        _result(report["verdicts"]["l1_trend"] == "pass" and report["verdicts"]["ae"] == "fail", "L1 passes, a.e. fails"),
        _result(
            files == ["counterexample.json", "counterexample_exceedance.csv", "counterexample_values.csv", "summary.md"],
            "JSON, CSV tables and summary written",
            files=files,
        ),
    ]


def test_demo_counterexample_six_blocks() -> list[dict[str, Any]]:
    """--n-max 6 (H = 247): JSON carries every (n, k) row, the L1 series and the exceedance at every N."""
    with tempfile.TemporaryDirectory() as tmp:
        code, _ = _run(["demo", "counterexample", "--n-max", "6", "--out", tmp, "--quiet"])
        report = _load_json(os.path.join(tmp, "counterexample.json"))
    block_l1 = [Fraction(b["l1"]) for b in report["blocks"]]
    rows, series = report["values"], report["l1_series"]
    exceed = report["exceedance"]
    verdicts = report["verdicts"]
    return [
        _result(code == EXIT_OK and report["horizon"] == 247, "demo exits 0 at horizon 247"),
        _result([b["n"] for b in report["blocks"]] == [2, 3, 4, 5, 6], "blocks n = 2..6"),
        _result(all(x > y for x, y in zip(block_l1, block_l1[1:])), "block L1 series strictly decreasing",
                l1=[str(v) for v in block_l1]),
        _result(verdicts["l1_trend"] == "pass", "L1 trend verdict passes"),
        _result(len(rows) == len(series) == 248 and all(r["l1"] == series[r["index"]] for r in rows),
                "per-(n, k) rows and L1 series cover every index"),
        _result(rows[-1]["n"] == 6 and rows[-1]["k"] == 127 and rows[-1]["on_C"] == "2/129", "last row is (6, 127) with C value 2/129"),
        _result(len(exceed) == 248 and verdicts["exceedance_checked_through"] == 120, "exceedance at every N, bound checked through N = 120"),
        _result(all(Fraction(e["measure"]) >= Fraction(1, 2) for e in exceed[:121]), "exceedance >= 1/2 for every N <= 120"),
        _result(verdicts["min_exceedance"] == "65/128", "smallest checked exceedance 1/2 + 2^-7", actual=verdicts["min_exceedance"]),
        _result([e["window_start"] for e in exceed if e["block_start"]] == [0, 8, 24, 56, 120], "block starts flagged"),
    ]


def test_demo_martingale_report() -> list[dict[str, Any]]:
    with tempfile.TemporaryDirectory() as tmp:
        code, _ = _run(["demo", "martingale", "--out", tmp, "--quiet"])
        report = _load_json(os.path.join(tmp, "martingale.json"))
    off_diagonal = [row["distance"] for row in report["boylan"] if row["i"] != row["j"]]
    return [
        _result(code == EXIT_OK, "martingale demo exits 0"),
        _result(report["exact_from"] <= 5, "ℰ(f|D_n) = f from the function's level on", exact_from=report["exact_from"]),
        _result(off_diagonal and all(d == "1/2" for d in off_diagonal), "d(D_n, D_m) = 1/2 off the diagonal"),
    ]


# -----------------------------------------------------------------------------
# analyze / boylan
# -----------------------------------------------------------------------------

def test_analyze_deterministic() -> list[dict[str, Any]]:
    with tempfile.TemporaryDirectory() as tmp:
        first, second = os.path.join(tmp, "a"), os.path.join(tmp, "b")
        argv = ["analyze", "--scenario", _scenario("martingale.json"), "--quiet", "--formats", "json,csv"]
        code_a, _ = _run([*argv, "--out", first])
        code_b, _ = _run([*argv, "--out", second])
        bytes_a, bytes_b = _read_bytes(first), _read_bytes(second)
        comparison = compare_reports(_load_json(os.path.join(first, "ae.json")), _load_json(os.path.join(second, "ae.json")))
    return [
        _result(code_a == code_b == EXIT_OK, "both runs exit 0"),
        _result(bytes_a == bytes_b and len(bytes_a) > 0, "two runs write byte-identical files", files=sorted(bytes_a)),
        _result(not comparison["mismatches"] and comparison["matches"] == comparison["total"], "compare_reports finds no differences"),
    ]


def test_analyze_alternating() -> list[dict[str, Any]]:
    with tempfile.TemporaryDirectory() as tmp:
        code, _ = _run(["analyze", "--scenario", _scenario("alternating.json"), "--out", tmp, "--quiet"])
        report = _load_json(os.path.join(tmp, "liminf_limsup.json"))
    return [
        _result(code == EXIT_OK, "alternating scenario exits 0"),
        _result(report["liminf"] == [[["0", "1"]]], "liminf is the trivial algebra", actual=report["liminf"]),
        _result(len(report["limsup"]) == 4, "limsup is the level-2 dyadic algebra", atoms=len(report["limsup"])),
        _result(report["min_tail"] == 2, "min_tail taken from the scenario"),
    ]


def test_analyze_wperp_scenario() -> dict[str, Any]:
    scenario = {
        "sequence": {"builtin": "counterexample_s3", "params": {}},
        "horizon": 55,
        "function": {"indicator": [["1/2", "1"]]},
        "analyses": ["wperp"],
        "wperp": {"eps": "1/2"},
    }
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "wperp55.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump(scenario, f)
        code, _ = _run(["analyze", "--scenario", path, "--out", os.path.join(tmp, "out"), "--quiet"])
        report = _load_json(os.path.join(tmp, "out", "wperp.json"))
    minimum = Fraction(report["min"])
    return _result(code == EXIT_OK and minimum >= Fraction(3, 8), "pairing stays >= 3/8 up to H = 55", min=report["min"])


def test_boylan_command() -> list[dict[str, Any]]:
    code, out = _run(["boylan", "--scenario", _scenario("counterexample.json"), "--i", "0", "--j", "1"])
    bad_code, _ = _run(["boylan", "--scenario", _scenario("martingale.json"), "--i", "0", "--j", "9"])
    return [
        _result(code == EXIT_OK and "= 1/4" in out, "d(𝔄_0, 𝔄_1) = 1/4 printed exactly", output=out),
        _result("decimal: 0.25" in out, "decimal view printed"),
        _result(bad_code == EXIT_USAGE, "index beyond the horizon exits 1"),
    ]


# -----------------------------------------------------------------------------
# Run all
# -----------------------------------------------------------------------------

def run_unit_tests() -> dict[str, list[dict[str, Any]]]:
    groups: dict[str, list[dict[str, Any]]] = {}
    groups["cli_exit_codes"] = test_exit_codes()
    groups["cli_demos"] = [
        *test_demo_counterexample_report(),
        *test_demo_counterexample_six_blocks(),
        *test_demo_martingale_report(),
    ]
    groups["cli_analyze"] = [
        *test_analyze_deterministic(),
        *test_analyze_alternating(),
        test_analyze_wperp_scenario(),
        *test_boylan_command(),
    ]
    return groups
