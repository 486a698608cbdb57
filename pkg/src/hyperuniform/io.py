"""Reading and writing configurations, trajectories, reports and experiment configs.

Every write goes to a temporary file in the destination directory and is
moved into place with :func:`os.replace`, so readers never see partial files.
"""
from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .errors import DomainError
from .objectives import ObjectiveSpec
from .optimizer import RECORD_FIELDS, OptimizerConfig, Trajectory
from .sphere import check_configuration

SCHEMA = "v1"


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _g17(v) -> str:
    return "%.17g" % v


def configuration_csv(x) -> str:
    x = np.asarray(x, dtype=float)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{j}" for j in range(x.shape[1])])
    for row in x:
        w.writerow([_g17(v) for v in row])
    return buf.getvalue()


def configuration_json(x) -> str:
    x = np.asarray(x, dtype=float)
    return json.dumps({"n": x.shape[0], "d": x.shape[1], "points": x.tolist()}) + "\n"


def write_configuration(path, x) -> None:
    """Write as CSV or JSON, chosen by the file extension."""
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        atomic_write_text(path, configuration_csv(x))
    elif suffix == ".json":
        atomic_write_text(path, configuration_json(x))
    else:
        raise DomainError(f"unsupported configuration format {suffix!r}; use .csv or .json")


def read_configuration(path, validate: bool = True) -> np.ndarray:
    """Read a CSV (with an ``x0,x1,...`` header) or JSON configuration."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".csv":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if rows and rows[0] and rows[0][0].strip().startswith("x"):
            rows = rows[1:]
        x = np.array([[float(v) for v in r] for r in rows if r], dtype=float)
    elif suffix == ".json":
        with open(path) as fh:
            data = json.load(fh)
        x = np.asarray(data["points"], dtype=float)
        if x.shape != (data.get("n", x.shape[0]), data.get("d", x.shape[-1])):
            raise DomainError(f"declared shape ({data.get('n')}, {data.get('d')}) does not match points {x.shape}")
    else:
        raise DomainError(f"unsupported configuration format {suffix!r}; use .csv or .json")
    if x.ndim != 2:
        raise DomainError("configuration file holds no points")
    return check_configuration(x) if validate else x


def trajectory_csv(traj: Trajectory) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in traj.records:
        w.writerow([r.iter] + [_g17(v) for v in r.as_tuple()[1:]])
    return buf.getvalue()


def trajectory_dict(traj: Trajectory) -> dict:
    return {
        "records": [dict(zip(RECORD_FIELDS, r.as_tuple())) for r in traj.records],
        "final": traj.final.tolist(),
    }


def _finite(obj):
    """Replace non-finite floats by strings so the output stays valid JSON."""
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return _finite(obj.item())
    if isinstance(obj, np.ndarray):
        return _finite(obj.tolist())
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def write_report(path, kind: str, body: dict, config=None, seed=None) -> dict:
    """Versioned JSON report with a provenance header."""
    report = {
        "schema": SCHEMA,
        "report": kind,
        "provenance": {"version": __version__, "config": config, "seed": seed},
    }
    report.update(body)
    report = _finite(report)
    if path is not None:
        atomic_write_text(path, json.dumps(report, indent=2) + "\n")
    return report


# --------------------------------------------------------------------------- experiment configs

INIT_KINDS = ("uniform", "file", "simplex", "cross_polytope")


@dataclass
class ExperimentConfig:
    objective: ObjectiveSpec
    optimizer: OptimizerConfig
    n: int
    d: int
    restarts: int = 1
    init: dict = field(default_factory=lambda: {"kind": "uniform", "seed": 0})
    outputs: dict = field(default_factory=dict)

    def to_dict(self):
        out = self.objective.to_dict()
        out.update(
            optimizer=self.optimizer.to_dict(),
            n=self.n,
            d=self.d,
            restarts=self.restarts,
            init=dict(self.init),
            outputs={k: str(v) for k, v in self.outputs.items()},
        )
        return out


def load_experiment(path) -> ExperimentConfig:
    """Parse a JSON experiment file.

    Objective fields sit at the top level (``objective``, ``kernel``,
    ``augment``, ``inner``, ...); omitted fields take the library defaults,
    except the distance metric, which must be given for every objective that
    uses one.  Output paths are relative to the config file.
    """
    path = Path(path)
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise DomainError("experiment config must be a JSON object")
    known = {"objective", "kernel", "augment", "inner", "gamma", "epsilon", "jitter", "scale",
             "optimizer", "n", "d", "restarts", "init", "outputs"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise DomainError(f"unknown config keys: {', '.join(unknown)}")
    objective = ObjectiveSpec.from_dict(data, require_metric=True)
    optimizer = OptimizerConfig.from_dict(data.get("optimizer"))
    if "n" not in data or "d" not in data:
        raise DomainError("config needs n and d")
    n, d = int(data["n"]), int(data["d"])
    restarts = int(data.get("restarts", 1))
    if restarts < 1:
        raise DomainError("restarts must be >= 1")
    init = data.get("init", {"kind": "uniform", "seed": optimizer.seed})
    if isinstance(init, str):
        init = {"kind": init}
    init = dict(init)
    if init.get("kind") not in INIT_KINDS:
        raise DomainError(f"init.kind must be one of {INIT_KINDS}")
    if init["kind"] == "uniform":
        init.setdefault("seed", optimizer.seed)
    if init["kind"] == "file":
        if "path" not in init:
            raise DomainError("init.kind 'file' needs init.path")
        init["path"] = str((path.parent / init["path"]).resolve())
    base = path.parent
    stem = path.stem
    defaults = {
        "trajectory_csv": f"{stem}.trajectory.csv",
        "final_json": f"{stem}.final.json",
        "report_json": f"{stem}.report.json",
    }
    outputs = dict(defaults, **(data.get("outputs") or {}))
    unknown = sorted(set(outputs) - set(defaults))
    if unknown:
        raise DomainError(f"unknown output keys: {', '.join(unknown)}")
    outputs = {k: base / v for k, v in outputs.items()}
    return ExperimentConfig(objective, optimizer, n, d, restarts, init, outputs)
