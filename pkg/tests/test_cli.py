"""Command-line interface: subcommands, report files, exit codes."""
import csv
import json

import pytest

from lindexp import harness
from lindexp.cli import main
from lindexp.oracle import OracleFailure


@pytest.fixture
def qubit_model(tmp_path):
    path = tmp_path / "qubit.json"
    path.write_text(json.dumps({"type": "ising", "d": 2, "K": 1,
                                "gamma": 0.2}))
    return str(path)


@pytest.fixture
def pair_model(tmp_path):
    path = tmp_path / "pair.json"
    path.write_text(json.dumps({"type": "ising", "d": 2, "K": 2,
                                "gamma": 0.1}))
    return str(path)


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


def test_converge_writes_report(qubit_model, tmp_path, capsys):
    out = tmp_path / "reports"
    code = main(["converge", "--model", qubit_model,
                 "--scheme", "frem-forward", "--steps", "8,16,32",
                 "--out", str(out)])
    assert code == 0
    rows = read_rows(out / "converge_frem-forward.csv")
    assert rows[0] == list(harness.REPORT_COLUMNS)
    assert len(rows) == 4
    meta = json.loads((out / "converge_frem-forward.json").read_text())
    assert 1.5 <= meta["fitted_order"] <= 2.5
    assert "fitted order" in capsys.readouterr().out


def test_converge_is_deterministic(qubit_model, tmp_path):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert main(["converge", "--model", qubit_model,
                     "--steps", "8,16", "--seed", "3",
                     "--out", str(out)]) == 0
        text = (out / "converge_frem-forward.csv").read_text()
        outs.append(harness.strip_wall_column(text))
    assert outs[0] == outs[1]


def test_series_writes_report(qubit_model, tmp_path):
    out = tmp_path / "series"
    code = main(["series", "--model", qubit_model, "--steps", "40",
                 "--horizon", "4.0", "--out", str(out)])
    assert code == 0
    rows = read_rows(out / "series_frem-forward.csv")
    assert rows[0] == list(harness.SERIES_COLUMNS)
    assert len(rows) == 42


def test_series_rejects_step_grid(qubit_model, tmp_path):
    assert main(["series", "--model", qubit_model, "--steps", "10,20",
                 "--out", str(tmp_path)]) == 1


def test_sweep_writes_family(pair_model, tmp_path):
    out = tmp_path / "sweep"
    code = main(["sweep", "--model", pair_model,
                 "--scheme", "lrem-forward", "--vary", "delta",
                 "--values", "1e-2,1e-4", "--steps", "8,16,32",
                 "--out", str(out)])
    assert code == 0
    assert (out / "sweep_delta_0.01.csv").exists()
    assert (out / "sweep_delta_0.0001.csv").exists()
    summary = json.loads((out / "sweep_delta.json").read_text())
    assert summary["plateau_levels"][0] > summary["plateau_levels"][1]


def test_timing_smoke(tmp_path):
    out = tmp_path / "timing"
    code = main(["timing", "--dims", "2", "--count", "1",
                 "--target", "1e-2", "--repeats", "1",
                 "--max-steps", "256", "--out", str(out)])
    assert code == 0
    rows = read_rows(out / "timing.csv")
    assert rows[0] == list(harness.TIMING_COLUMNS)
    assert {row[0] for row in rows[1:]} == {"frem", "lrem", "dense-vec"}


def test_check_battery(capsys):
    assert main(["check", "--samples", "30"]) == 0
    assert "checks passed" in capsys.readouterr().out


def test_unknown_flag_exits_one(qubit_model):
    assert main(["converge", "--model", qubit_model, "--bogus"]) == 1


def test_unknown_command_exits_one():
    assert main(["reticulate"]) == 1


def test_help_exits_zero():
    assert main(["--help"]) == 0


def test_missing_model_file_exits_one(tmp_path):
    assert main(["converge", "--model", str(tmp_path / "nope.json")]) == 1


def test_invalid_model_json_exits_one(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["converge", "--model", str(bad)]) == 1


def test_oracle_failure_exits_two(qubit_model, monkeypatch):
    def explode(*args, **kwargs):
        raise OracleFailure("no certified reference")

    monkeypatch.setattr("lindexp.harness.run_convergence", explode)
    assert main(["converge", "--model", qubit_model]) == 2
