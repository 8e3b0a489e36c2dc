import json
import subprocess
import sys

import numpy as np
import pytest

from lastseq.cli import main


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr().out
    return code, out


def test_analyze_gamma(capsys):
    code, out = run_cli(["analyze", "gamma", "--M", "2", "--N", "2", "--T",
                         "3", "--L", "2", "--rho", "100"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert 96 <= doc["avg_gamma_out"] <= 100


def test_analyze_ratio_snr_db(capsys):
    code, out = run_cli(["analyze", "ratio", "--T", "3", "--snr-db", "80"],
                        capsys)
    doc = json.loads(out)
    assert 6.9 <= doc["complexity_ratio"] <= 7.9


def test_analyze_dmt(capsys):
    code, out = run_cli(["analyze", "dmt", "--ell", "1", "--re", "1"], capsys)
    doc = json.loads(out)
    assert doc["breakpoints"] == [[0.0, 4.0], [1.0, 1.0], [2.0, 0.0]]
    assert doc["optimal_arq"]["long-term"] == pytest.approx(2.25)
    assert doc["optimal_arq"]["short-term"] == pytest.approx(4.5)


def test_simulate_plan_roundtrip(tmp_path, capsys):
    plan = {
        "M": 1, "N": 1, "T": 2, "L": 2, "rate_r1": 4.0,
        "p": 5, "k": 3, "code_seed": 7, "calib_samples": 2000,
        "snr_db_grid": [16.0], "trials": 25, "master_seed": 3,
        "variants": [{"name": "quick", "kind": "stack", "bias": 0.5,
                      "gamma_out": 12}],
        "output_csv": str(tmp_path / "out.csv"),
    }
    plan_path = tmp_path / "plan.json"
    plan_path.write_text(json.dumps(plan))
    code, out = run_cli(["simulate", str(plan_path)], capsys)
    assert code == 0
    header = (tmp_path / "out.csv").read_text().splitlines()[0]
    assert header.startswith("snr_db,variant,b,gamma_out,trials,fer")


def test_validate_passes(capsys):
    code, out = run_cli(["validate"], capsys)
    assert code == 0
    assert "FAIL" not in out
    assert out.count("PASS") >= 5


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "lastseq.cli", "analyze", "ratio", "--T", "3",
         "--rho", "1e8"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "complexity_ratio" in proc.stdout
