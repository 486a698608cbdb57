import json
import subprocess
import sys

import numpy as np
import pytest

from hyperuniform.cli import main, uniformity_report
from hyperuniform.errors import DomainError
from hyperuniform.io import (
    configuration_csv,
    load_experiment,
    read_configuration,
    trajectory_csv,
    write_configuration,
    write_report,
)
from hyperuniform.objectives import Kind
from hyperuniform.optimizer import RECORD_FIELDS, OptimizerConfig, run
from hyperuniform.objectives import ObjectiveSpec
from hyperuniform.sphere import Metric, sample_uniform


def write_json(path, data):
    path.write_text(json.dumps(data))
    return path


@pytest.mark.parametrize("suffix", [".csv", ".json"])
def test_configuration_round_trip_is_exact(tmp_path, suffix):
    x = sample_uniform(40, 5, 3)
    write_configuration(tmp_path / f"c{suffix}", x)
    assert np.array_equal(read_configuration(tmp_path / f"c{suffix}"), x)


def test_csv_uses_17_digits():
    line = configuration_csv(np.array([[1 / 3, np.sqrt(8 / 9)]])).splitlines()[1]
    assert line == "%.17g,%.17g" % (1 / 3, np.sqrt(8 / 9))


def test_read_rejects_non_unit_rows_and_formats(tmp_path):
    (tmp_path / "bad.csv").write_text("x0,x1\n1,1\n")
    with pytest.raises(DomainError):
        read_configuration(tmp_path / "bad.csv")
    with pytest.raises(DomainError):
        write_configuration(tmp_path / "c.txt", np.eye(2))
    write_json(tmp_path / "shape.json", {"n": 3, "d": 2, "points": [[1, 0], [0, 1]]})
    with pytest.raises(DomainError):
        read_configuration(tmp_path / "shape.json")


def test_trajectory_csv_header_and_rows():
    tr = run(sample_uniform(5, 3, 0), ObjectiveSpec(Kind.RMHP), OptimizerConfig(max_iters=20, record_every=10))
    lines = trajectory_csv(tr).splitlines()
    assert lines[0] == ",".join(RECORD_FIELDS)
    assert [int(l.split(",")[0]) for l in lines[1:]] == [0, 10, 20]


def test_report_has_schema_and_provenance(tmp_path):
    rep = write_report(tmp_path / "r.json", "test", {"value": float("inf")}, {"a": 1}, 5)
    on_disk = json.loads((tmp_path / "r.json").read_text())
    assert on_disk == rep
    assert rep["schema"] == "v1" and rep["provenance"]["seed"] == 5
    assert rep["value"] == "inf"
    assert not list(tmp_path.glob(".*.tmp"))


# --- experiment configs


def test_load_experiment_defaults(tmp_path):
    cfg = load_experiment(write_json(tmp_path / "exp.json", {"objective": "mhe", "kernel": {"metric": "chordal"}, "n": 6, "d": 3}))
    assert cfg.objective.augment and cfg.objective.kernel.s == 2.0
    assert cfg.optimizer.momentum == 0.9 and cfg.restarts == 1
    assert cfg.init == {"kind": "uniform", "seed": 0}
    assert cfg.outputs["final_json"] == tmp_path / "exp.final.json"


@pytest.mark.parametrize(
    "data",
    [
        {"objective": "mhe", "n": 4, "d": 3},
        {"objective": "mhe", "kernel": {"metric": "chordal"}, "n": 4, "d": 3, "bogus": 1},
        {"objective": "mhe", "kernel": {"metric": "chordal"}, "n": 4},
        {"objective": "mhe", "kernel": {"metric": "chordal"}, "n": 4, "d": 3, "restarts": 0},
        {"objective": "mhe", "kernel": {"metric": "chordal"}, "n": 4, "d": 3, "init": {"kind": "file"}},
    ],
)
def test_load_experiment_rejects_bad_configs(tmp_path, data):
    with pytest.raises(DomainError):
        load_experiment(write_json(tmp_path / "exp.json", data))


# --- command line


def test_sample_is_byte_identical(tmp_path):
    for name in ("a.csv", "b.csv"):
        assert main(["sample", "-n", "100", "-d", "3", "--seed", "7", "--output", str(tmp_path / name)]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_sample_then_test_matches_in_memory(tmp_path, capsys):
    main(["sample", "-n", "50", "-d", "4", "--seed", "2", "--output", str(tmp_path / "c.csv")])
    assert main(["test", "--input", str(tmp_path / "c.csv"), "--output", str(tmp_path / "r.json")]) == 0
    rep = json.loads((tmp_path / "r.json").read_text())
    want = uniformity_report(sample_uniform(50, 4, 2))
    for key in ("ajne", "rayleigh"):
        assert rep[key] == pytest.approx(want[key], abs=1e-12)
    assert rep["sobolev"]["value"] == pytest.approx(want["sobolev"]["value"], abs=1e-12)
    assert rep["range"] is None and rep["sobolev"]["K"] == 41


def test_test_on_circle_reports_range(tmp_path, capsys):
    main(["sample", "-n", "8", "-d", "2", "--output", str(tmp_path / "c.json")])
    assert main(["test", "--input", str(tmp_path / "c.json")]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["range"] is not None and rep["sobolev"] is None


def test_optimize_writes_outputs(tmp_path):
    cfg = {
        "objective": "mhe", "kernel": {"s": 1.0, "metric": "chordal"}, "augment": False, "n": 4, "d": 3,
        "restarts": 3, "optimizer": {"lr_schedule": [[0, 0.01]], "max_iters": 200, "record_every": 50},
    }
    assert main(["optimize", "--config", str(write_json(tmp_path / "e.json", cfg)), "--oracle-samples", "1000"]) == 0
    rep = json.loads((tmp_path / "e.report.json").read_text())
    assert rep["schema"] == "v1" and rep["provenance"]["seed"] == 0
    assert rep["provenance"]["config"]["optimizer"]["max_iters"] == 200
    assert len(rep["final_values"]) == 3 and "diagnostics" in rep
    x = read_configuration(tmp_path / "e.final.json")
    assert x.shape == (4, 3)
    assert (tmp_path / "e.trajectory.csv").read_text().startswith("iter,")


def test_optimize_from_simplex_init(tmp_path):
    cfg = {"objective": "rmhp", "n": 4, "d": 3, "init": "simplex", "optimizer": {"max_iters": 5}}
    assert main(["optimize", "--config", str(write_json(tmp_path / "e.json", cfg))]) == 0


def test_optimize_rmhp_with_augment_exits_3(tmp_path, capsys):
    cfg = {"objective": "rmhp", "augment": True, "n": 5, "d": 3}
    assert main(["optimize", "--config", str(write_json(tmp_path / "e.json", cfg))]) == 3
    assert "rmhp" in capsys.readouterr().err


def test_optimize_singular_start_exits_3(tmp_path):
    (tmp_path / "x.csv").write_text("x0,x1,x2\n1,0,0\n1,0,0\n0,1,0\n")
    cfg = {"objective": "mhe", "kernel": {"metric": "chordal"}, "augment": False, "n": 3, "d": 3,
           "init": {"kind": "file", "path": "x.csv"}, "optimizer": {"max_iters": 5}}
    assert main(["optimize", "--config", str(write_json(tmp_path / "e.json", cfg))]) == 3


def test_missing_input_exits_2(tmp_path):
    assert main(["test", "--input", str(tmp_path / "nope.csv")]) == 2
    assert main(["optimize", "--config", str(write_json(tmp_path / "e.json", {"objective": "mhe"}))]) == 2


def test_usage_error_names_flag(capsys):
    with pytest.raises(SystemExit) as err:
        main(["sample", "-d", "3"])
    assert err.value.code == 2
    assert "-n" in capsys.readouterr().err


def test_oracle_thm5_passes(tmp_path, capsys):
    out = tmp_path / "o.json"
    assert main(["oracle", "--check", "thm5", "--output", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["passed"] and rep["details"]["relative_error"] <= 1e-6
    assert "thm5: PASS" in capsys.readouterr().out


def test_diagnose_command(tmp_path, capsys):
    write_configuration(tmp_path / "x.json", np.vstack([np.eye(3), -np.eye(3)]))
    assert main(["diagnose", "--input", str(tmp_path / "x.json"), "--oracle-samples", "2000"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["sigma_max"] == pytest.approx(np.sqrt(2))


def test_console_script_version():
    out = subprocess.run([sys.executable, "-m", "hyperuniform.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "0.1.0" in out.stdout


@pytest.mark.parametrize("check", ["prop1", "prop4"])
def test_oracle_closed_form_checks(tmp_path, check):
    assert main(["oracle", "--check", check, "--output", str(tmp_path / "o.json")]) == 0
    assert json.loads((tmp_path / "o.json").read_text())["passed"]
