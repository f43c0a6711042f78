#!/usr/bin/env python3
"""
Tests for the command line workflows: exit codes, configuration handling and
the artifacts each command writes.
"""

import io
import json
import os

import pytest

from cli.runner import EXIT_CONFIG, EXIT_OK, EXIT_TOLERANCE, build_parser, load_config, main
from core.config import ExperimentConfig
from core.exact import InitialCondition
from utils.logging import FileManager, RunLogger

SMALL = {
    "grid": {"L": 20.0, "dx": 0.1},
    "solver": {"dt": 0.05, "T": 1.0, "snapshot_every": 0.5},
}


def write_config(tmp_path, name="config.json", **sections):
    data = json.loads(json.dumps(SMALL))
    for key, value in sections.items():
        if isinstance(value, dict) and isinstance(data.get(key), dict):
            data[key].update(value)
        else:
            data[key] = value
    path = os.path.join(str(tmp_path), name)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f)
    return path


def run(argv):
    logger = RunLogger(stream=io.StringIO())
    code = main(argv, logger)
    return code, "".join(logger.entries)


def test_print_defaults(capsys):
    assert main(["--print-defaults"], RunLogger(quiet=True)) == EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert printed == ExperimentConfig.defaults().to_dict()
    assert ExperimentConfig.from_dict(printed) == ExperimentConfig.defaults()


def test_print_defaults_follow_the_command(capsys):
    assert main(["decompose", "--print-defaults"], RunLogger(quiet=True)) == EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert printed == ExperimentConfig.for_decomposition().to_dict()
    assert printed["solver"]["T"] == 20.0 and printed["grid"]["L"] == 60.0
    assert main(["simulate", "--print-defaults"], RunLogger(quiet=True)) == EXIT_OK
    assert json.loads(capsys.readouterr().out) == ExperimentConfig.defaults().to_dict()


def test_config_files_merge_onto_the_command_defaults(tmp_path):
    path = write_config(tmp_path, initial={"amplitude": 0.02})
    args = build_parser().parse_args(["decompose", "--config", path])
    config = load_config(args)
    assert config.initial == InitialCondition.gaussian(0.02, 1.0)
    assert config.grid.L == 20.0 and config.solver.T == 1.0
    assert config.decomposition.snapshot_every == 0.05
    args = build_parser().parse_args(["simulate", "--config", path])
    assert load_config(args).initial == InitialCondition.gaussian(0.02, 1.0)
    assert load_config(build_parser().parse_args(["verify"])) == ExperimentConfig.for_decomposition()


def test_missing_and_unknown_command():
    code, log = run([])
    assert code == EXIT_CONFIG
    assert "command is required" in log
    code, _ = run(["integrate"])
    assert code == EXIT_CONFIG


def test_bad_config_file(tmp_path):
    code, log = run(["simulate", "--config", os.path.join(str(tmp_path), "missing.json")])
    assert code == EXIT_CONFIG
    assert "not found" in log
    path = write_config(tmp_path, grid={"L": 20.0, "dx": 0.1, "nodes": 5})
    code, log = run(["simulate", "--config", path])
    assert code == EXIT_CONFIG
    assert "nodes" in log


def test_domain_guard_is_a_config_error(tmp_path):
    path = write_config(tmp_path, grid={"L": 10.0, "dx": 0.1}, solver={"T": 10.0, "snapshot_every": 1.0})
    code, log = run(["simulate", "--config", path, "--out", str(tmp_path / "out")])
    assert code == EXIT_CONFIG
    assert "cT + 8 sqrt" in log


def test_simulate_zero_data(tmp_path):
    out = str(tmp_path / "out")
    path = write_config(tmp_path, initial={"kind": "zero"})
    code, _ = run(["simulate", "--config", path, "--out", out])
    assert code == EXIT_OK
    summary = FileManager.read_json(os.path.join(out, "summary.json"))
    assert summary["max_abs_err"] == 0.0 and summary["passed"]
    paths = [entry["path"] for entry in summary["manifest"]]
    assert "errors.csv" in paths
    assert "comparison/compare_0002.csv" in paths
    assert "snapshots/manifest.json" in paths
    assert not any(p.startswith("logs/") for p in paths)
    rows = FileManager.read_csv(os.path.join(out, "comparison", "compare_0001.csv"))
    assert all(row["phi_numeric"] == 0.0 and row["abs_err"] == 0.0 for row in rows)
    assert os.path.exists(os.path.join(out, "logs", "simulate_1.txt"))


def test_simulate_tolerance_violation(tmp_path):
    out = str(tmp_path / "out")
    path = write_config(tmp_path, tolerances={"simulate_max_abs_err": 1e-14})
    code, log = run(["simulate", "--config", path, "--out", out])
    assert code == EXIT_TOLERANCE
    summary = FileManager.read_json(os.path.join(out, "summary.json"))
    assert not summary["passed"]
    assert "ToleranceViolation" in log


def test_identical_configs_give_identical_outputs(tmp_path):
    path = write_config(tmp_path, tolerances={"simulate_max_abs_err": 1.0})
    first, second = str(tmp_path / "a"), str(tmp_path / "b")
    assert run(["simulate", "--config", path, "--out", first])[0] == EXIT_OK
    assert run(["simulate", "--config", path, "--out", second])[0] == EXIT_OK
    assert FileManager.manifest(first) == FileManager.manifest(second)
    assert FileManager.read_json(os.path.join(first, "summary.json")) == \
        FileManager.read_json(os.path.join(second, "summary.json"))


def test_verify_check_selection(tmp_path):
    path = write_config(tmp_path)
    code, log = run(["verify", "--config", path, "--out", str(tmp_path / "out")])
    assert code == EXIT_CONFIG
    assert "no checks selected" in log
    code, log = run(["verify", "--config", path, "--checks", "semigroup,wavelet", "--out", str(tmp_path / "out")])
    assert code == EXIT_CONFIG
    assert "wavelet" in log and "lemma_tG" in log


def test_verify_kernel_identities(tmp_path):
    out = str(tmp_path / "out")
    path = write_config(tmp_path)
    code, _ = run(["verify", "--config", path, "--checks", "semigroup,mass", "--out", out])
    assert code == EXIT_OK
    report = FileManager.read_json(os.path.join(out, "reports", "semigroup.json"))
    assert report["passed"] and report["value"] <= 1e-6
    assert report["samples"] == 2 * 21
    rows = FileManager.read_csv(os.path.join(out, "reports", "mass.csv"))
    assert len(rows) == 9
    summary = FileManager.read_json(os.path.join(out, "summary.json"))
    assert summary["checks"] == "mass,semigroup"
    assert summary["failed"] == ""


def test_decompose_zero_data(tmp_path):
    out = str(tmp_path / "out")
    path = write_config(tmp_path, initial={"kind": "zero"}, decomposition={"snapshot_every": 0.1, "export_every": 0.5})
    code, _ = run(["decompose", "--config", path, "--out", out])
    assert code == EXIT_OK
    summary = FileManager.read_json(os.path.join(out, "summary.json"))
    assert summary["p0"] == 0.0 and summary["sup_h1"] == 0.0 and summary["sup_h2"] == 0.0
    rows = FileManager.read_csv(os.path.join(out, "timeseries.csv"))
    assert len(rows) == 11
    assert all(row["p"] == 0.0 and row["pdot"] == 0.0 for row in rows)
    manifest = FileManager.read_json(os.path.join(out, "v_fields", "manifest.json"))
    assert [entry["t"] for entry in manifest["snapshots"]] == [0.0, 0.5, 1.0]
    assert not summary["decay_passed"]
    assert summary["fit_note"].startswith("run too short for the decay fit")


def test_decompose_is_deterministic(tmp_path):
    path = write_config(tmp_path, initial={"amplitude": 0.05}, decomposition={"snapshot_every": 0.1})
    first, second = str(tmp_path / "a"), str(tmp_path / "b")
    assert run(["decompose", "--config", path, "--out", first])[0] == EXIT_OK
    assert run(["decompose", "--config", path, "--out", second])[0] == EXIT_OK
    assert FileManager.manifest(first) == FileManager.manifest(second)
    assert FileManager.read_json(os.path.join(first, "summary.json")) == \
        FileManager.read_json(os.path.join(second, "summary.json"))


def test_convergence_zero_data_has_undefined_order(tmp_path):
    out = str(tmp_path / "out")
    path = write_config(tmp_path, initial={"kind": "zero"})
    code, log = run(["convergence", "--config", path, "--out", out])
    assert code == EXIT_OK
    assert "order undefined" in log
    rows = FileManager.read_csv(os.path.join(out, "convergence.csv"))
    assert [row["dx"] for row in rows] == pytest.approx([0.1, 0.05, 0.025])
    assert FileManager.read_json(os.path.join(out, "summary.json"))["order"] == "undefined"


@pytest.mark.slow
def test_convergence_order_is_two(tmp_path):
    out = str(tmp_path / "out")
    code, _ = run(["convergence", "--out", out])
    assert code == EXIT_OK
    order = FileManager.read_json(os.path.join(out, "summary.json"))["order"]
    assert 1.7 <= order <= 2.3


@pytest.mark.slow
def test_simulate_default_config(tmp_path):
    out = str(tmp_path / "out")
    code, _ = run(["simulate", "--out", out])
    assert code == EXIT_OK
    assert FileManager.read_json(os.path.join(out, "summary.json"))["max_abs_err"] <= 5e-3
