"""Command-line front end: generate | run | optimize | mc | report.

Every command reads an optional JSON config, overrides its keys with the
command-line flags, validates the merged result and writes it to
``<out>/config.json`` next to a ``manifest.json`` listing the files produced.

Exit codes: 0 success, 1 missing input, 2 usage or config error,
3 computation failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from . import metrics
from . import optimizer as opt
from .benchmarks import TASKS, TaskBundle, make_task
from .pipeline import ReservoirCost, evaluate, naive_report
from .reservoir import ReservoirConfig, Scheme, param_count

log = logging.getLogger("qnir")

EXIT_OK, EXIT_MISSING, EXIT_USAGE, EXIT_COMPUTE = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


class MissingInput(FileNotFoundError):
    pass


class ComputationError(RuntimeError):
    pass


DEFAULTS: dict[str, Any] = {
    "task": {"name": "narma2", "length": None, "file": None},
    "reservoir": {"n": 12, "scheme": "ps", "scale": 1.0, "offset": 0.0},
    "noise": {"file": None, "zero": False},
    "optimizer": {
        "name": "da",
        "max_iterations": 5,
        "evals_per_iteration": 240,
        "patience": 3,
        "rel_tol": 1e-3,
        "population": 20,
        "elite_fraction": 0.25,
        "sigma": 0.1,
    },
    "mc": {"trials": 30, "d_max": 20, "length": 1000},
    "seed": 0,
    "out": "qnir-out",
}


@dataclass
class ExperimentConfig:
    """Validated, fully populated experiment settings."""

    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    @classmethod
    def build(cls, file_cfg: Optional[dict], overrides: dict) -> "ExperimentConfig":
        data = copy.deepcopy(DEFAULTS)
        for src in (file_cfg or {}, overrides):
            _merge(data, src)
        cfg = cls(data)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        d = self.data
        unknown = set(d) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for section in ("task", "reservoir", "noise", "optimizer", "mc"):
            if not isinstance(d[section], dict):
                raise ConfigError(f"section {section!r} must be a mapping")
            extra = set(d[section]) - set(DEFAULTS[section])
            if extra:
                raise ConfigError(f"unknown keys in {section!r}: {sorted(extra)}")
        t = d["task"]
        if t["file"] is None and str(t["name"]).lower() not in TASKS:
            raise ConfigError(f"unknown task {t['name']!r}; expected one of {', '.join(TASKS)}")
        if t["length"] is not None and (not isinstance(t["length"], int) or t["length"] < 3):
            raise ConfigError("task length must be an integer >= 3")
        r = d["reservoir"]
        if r["scheme"] not in ("ps", "le"):
            raise ConfigError("scheme must be 'ps' or 'le'")
        if not isinstance(r["n"], int) or r["n"] < 2:
            raise ConfigError("qubit count must be an integer >= 2")
        try:
            param_count(r["scheme"], r["n"])
        except ValueError as err:
            raise ConfigError(str(err)) from None
        o = d["optimizer"]
        if o["name"] not in ("da", "eo"):
            raise ConfigError("optimizer must be 'da' or 'eo'")
        for key in ("max_iterations", "evals_per_iteration", "patience", "population"):
            if not isinstance(o[key], int) or o[key] < 1:
                raise ConfigError(f"optimizer.{key} must be a positive integer")
        if not 0.0 < o["elite_fraction"] < 1.0 or o["sigma"] <= 0:
            raise ConfigError("invalid evolution-strategy settings")
        m = d["mc"]
        if m["trials"] < 1 or m["d_max"] < 1 or m["length"] <= m["d_max"]:
            raise ConfigError("invalid memory-capacity settings")
        if not isinstance(d["seed"], int):
            raise ConfigError("seed must be an integer")

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True)

    def hash(self) -> str:
        """Stable under key reordering: hashes the sorted-key JSON."""
        blob = json.dumps(self.data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @property
    def out(self) -> Path:
        return Path(self.data["out"])

    def reservoir(self, washout: int) -> ReservoirConfig:
        r = self.data["reservoir"]
        return ReservoirConfig(r["n"], Scheme(r["scheme"]), r["scale"], r["offset"], washout)


def _merge(base: dict, upd: dict) -> None:
    for k, v in upd.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _merge(base[k], v)
        else:
            base[k] = v


@dataclass
class RunManifest:
    command: str
    config_hash: str
    version: str = __version__
    started: str = field(default_factory=lambda: _now())
    finished: Optional[str] = None
    files: list[str] = field(default_factory=list)

    def write(self, out: Path) -> None:
        self.finished = _now()
        self.files = sorted(set(self.files))
        body = {
            "command": self.command,
            "config_hash": self.config_hash,
            "version": self.version,
            "started": self.started,
            "finished": self.finished,
            "files": self.files,
        }
        (out / "manifest.json").write_text(json.dumps(body, indent=2))


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class _Writer:
    """Writes files into the output directory and records them in the manifest."""

    def __init__(self, cfg: ExperimentConfig, command: str):
        self.out = cfg.out
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest(command, cfg.hash())
        self.text("config.json", cfg.to_json())

    def path(self, name: str) -> Path:
        self.manifest.files.append(name)
        return self.out / name

    def text(self, name: str, body: str) -> None:
        self.path(name).write_text(body + "\n")

    def json(self, name: str, obj) -> None:
        self.text(name, json.dumps(obj, indent=2))

    def close(self) -> None:
        self.manifest.write(self.out)


# --- shared helpers ---------------------------------------------------------------


def _load_task(cfg: ExperimentConfig) -> TaskBundle:
    t = cfg.data["task"]
    if t["file"] is not None:
        path = Path(t["file"])
        if not path.exists() or not path.with_suffix(".json").exists():
            raise MissingInput(f"task file {path} (or its .json sidecar) not found")
        return TaskBundle.from_csv(path)
    return make_task(t["name"], t["length"])


def _load_noise(path, m: int) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise MissingInput(f"noise file {path} not found")
    d = json.loads(path.read_text())
    p = d.get("best_p", d.get("p")) if isinstance(d, dict) else d
    p = np.asarray(p, dtype=float)
    if p.shape != (m,):
        raise ConfigError(f"noise file holds {p.size} values, reservoir needs {m}")
    return p


def _noise(cfg: ExperimentConfig, rc: ReservoirConfig, required: bool = False) -> np.ndarray:
    nz = cfg.data["noise"]
    if nz["zero"]:
        return np.zeros(rc.n_params)
    if nz["file"] is not None:
        return _load_noise(nz["file"], rc.n_params)
    if required:
        raise MissingInput("a noise file (--p) is required")
    return opt.random_init(rc.n_params, cfg.data["seed"])


def _metrics_doc(task, rc, p, ev) -> dict:
    return {
        "task": task.name,
        "reservoir": rc.to_dict(),
        "p": [float(v) for v in p],
        "metrics": ev.report.to_dict(),
        "naive": naive_report(task).to_dict(),
        "degenerate_features": ev.features.is_degenerate(),
    }


# --- commands ---------------------------------------------------------------------


def cmd_generate(cfg: ExperimentConfig) -> int:
    task = _load_task(cfg)
    w = _Writer(cfg, "generate")
    task.to_csv(w.path("task.csv"))
    w.manifest.files.append("task.json")
    w.close()
    print(f"wrote {len(task)} rows of {task.name} to {w.out / 'task.csv'}")
    return EXIT_OK


def cmd_run(cfg: ExperimentConfig) -> int:
    task = _load_task(cfg)
    rc = cfg.reservoir(task.split.washout)
    p = _noise(cfg, rc)
    ev = evaluate(task, rc, p)
    doc = _metrics_doc(task, rc, p, ev)
    w = _Writer(cfg, "run")
    ev.features.to_csv(w.path("features.csv"))
    w.text("weights.json", ev.model.to_json())
    w.json("metrics.json", doc)
    w.close()
    if doc["degenerate_features"]:
        print("warning: all feature signals are zero (noise-free reservoir)", file=sys.stderr)
    _print_report(task.name, doc["metrics"], doc["naive"])
    return EXIT_OK


def cmd_optimize(cfg: ExperimentConfig) -> int:
    task = _load_task(cfg)
    rc = cfg.reservoir(task.split.washout)
    o = cfg.data["optimizer"]
    stop = opt.StopSettings(o["max_iterations"], o["patience"], o["rel_tol"])
    cost = ReservoirCost(task, rc)
    x0 = _load_noise(cfg.data["noise"]["file"], rc.n_params) if cfg.data["noise"]["file"] else None
    workers = opt.default_workers()
    if o["name"] == "da":
        s = opt.AnnealSettings(evals_per_iteration=o["evals_per_iteration"], seed=cfg.data["seed"], stop=stop)
        res = opt.dual_annealing(cost, rc.n_params, s, x0=x0, workers=workers)
    else:
        s = opt.EvoSettings(
            population=o["population"],
            elite_fraction=o["elite_fraction"],
            sigma=o["sigma"],
            evals_per_iteration=o["evals_per_iteration"],
            seed=cfg.data["seed"],
            stop=stop,
        )
        res = opt.evolutionary_optimize(cost, rc.n_params, s, x0=x0, workers=workers)
    if res.best_p is None or not np.isfinite(res.best_cost):
        raise ComputationError("optimisation ended without a finite cost")
    ev = evaluate(task, rc, res.best_p)
    doc = _metrics_doc(task, rc, res.best_p, ev)
    doc["optimization"] = {k: v for k, v in res.to_dict().items() if k != "best_p"}
    doc["optimization"]["improvement_orders"] = res.improvement_orders()
    w = _Writer(cfg, "optimize")
    w.json("best_p.json", {"best_p": [float(v) for v in res.best_p], "best_cost": float(res.best_cost)})
    res.history_to_csv(w.path("costs.csv"))
    w.text("weights.json", ev.model.to_json())
    w.json("metrics.json", doc)
    w.close()
    _print_report(task.name, doc["metrics"], doc["naive"])
    print(f"{res.n_evals} evaluations, stop: {res.stop_reason}, improvement {res.improvement_orders():.2f} orders")
    return EXIT_OK


def cmd_mc(cfg: ExperimentConfig) -> int:
    task = _load_task(cfg)
    rc = cfg.reservoir(task.split.washout)
    p = _noise(cfg, rc, required=True)
    m = cfg.data["mc"]
    lo, hi = float(task.u.min()), float(task.u.max())
    prof = metrics.memory_profile(rc, p, (lo, hi), m["d_max"], m["trials"], cfg.data["seed"], m["length"])
    w = _Writer(cfg, "mc")
    prof.to_csv(w.path("mf.csv"))
    doc = prof.to_dict()
    doc["input_range"] = [lo, hi]
    w.json("mc.json", doc)
    w.close()
    print(f"MC = {prof.capacity:.3f} over {m['trials']} trials (d = 1..{m['d_max']})")
    return EXIT_OK


def cmd_report(cfg: ExperimentConfig, dirs: list[str]) -> int:
    rows = []
    for d in dirs or [str(cfg.out)]:
        path = Path(d) / "metrics.json"
        if not path.exists():
            raise MissingInput(f"{path} not found")
        doc = json.loads(path.read_text())
        r = doc["reservoir"]
        rows.append({"run": d, "task": doc["task"], "model": f"{r['scheme'].upper()}{r['n']}", **doc["metrics"]})
        rows.append({"run": d, "task": doc["task"], "model": "Naive", **doc["naive"]})
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["run", "task", "model", "mse", "nmse", "nrmse", "mase"])
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    print(f"{'task':8s} {'model':6s} {'NMSE':>10s} {'NRMSE':>8s} {'MASE':>8s}")
    for row in rows:
        print(f"{row['task']:8s} {row['model']:6s} {row['nmse']:10.3e} {row['nrmse']:8.4f} {row['mase']:8.4f}")
    return EXIT_OK


def _print_report(name: str, m: dict, naive: dict) -> None:
    print(f"{name}: NMSE {m['nmse']:.3e} NRMSE {m['nrmse']:.4f} MASE {m['mase']:.4f}")
    print(f"{'naive':>{len(name)}}: NMSE {naive['nmse']:.3e} NRMSE {naive['nrmse']:.4f} MASE {naive['mase']:.4f}")


# --- argument parsing -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--task", help=f"benchmark name ({', '.join(TASKS)})")
    common.add_argument("--task-file", help="task CSV written by 'generate'")
    common.add_argument("--len", type=int, dest="length", help="series length (NARMA only)")
    common.add_argument("--scheme", choices=["ps", "le"])
    common.add_argument("--qubits", type=int)
    common.add_argument("--optimizer", choices=["da", "eo"])
    common.add_argument("--iterations", type=int, help="max outer iterations, counting the initial point")
    common.add_argument("--evals", type=int, help="cost evaluations per outer iteration")
    common.add_argument("--seed", type=int)
    common.add_argument("--p", dest="p_file", help="JSON file holding a noise vector")
    common.add_argument("--zero-noise", action="store_true", help="run with p = 0")
    common.add_argument("--trials", type=int)
    common.add_argument("--d-max", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="qnir", description="Quantum noise-induced reservoir computing")
    parser.add_argument("--version", action="version", version=f"qnir {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write a benchmark task to CSV")
    sub.add_parser("run", parents=[common], help="run reservoir + readout once")
    sub.add_parser("optimize", parents=[common], help="optimise the noise vector")
    sub.add_parser("mc", parents=[common], help="memory function and capacity")
    rep = sub.add_parser("report", parents=[common], help="tabulate metrics.json files")
    rep.add_argument("runs", nargs="*", help="run directories (default: --out)")
    return parser


def _overrides(args) -> dict:
    o: dict[str, Any] = {}

    def put(section, key, value):
        if value is not None:
            o.setdefault(section, {})[key] = value

    put("task", "name", args.task)
    put("task", "length", args.length)
    put("task", "file", args.task_file)
    put("reservoir", "scheme", args.scheme)
    put("reservoir", "n", args.qubits)
    put("optimizer", "name", args.optimizer)
    put("optimizer", "max_iterations", args.iterations)
    put("optimizer", "evals_per_iteration", args.evals)
    put("noise", "file", args.p_file)
    if args.zero_noise:
        put("noise", "zero", True)
    put("mc", "trials", args.trials)
    put("mc", "d_max", args.d_max)
    if args.seed is not None:
        o["seed"] = args.seed
    if args.out is not None:
        o["out"] = args.out
    return o


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_OK if err.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        file_cfg = None
        if args.config:
            path = Path(args.config)
            if not path.exists():
                raise MissingInput(f"config file {path} not found")
            try:
                file_cfg = json.loads(path.read_text())
            except json.JSONDecodeError as err:
                raise ConfigError(f"config is not valid JSON: {err}") from None
        cfg = ExperimentConfig.build(file_cfg, _overrides(args))
        if args.command == "report":
            return cmd_report(cfg, args.runs)
        return {"generate": cmd_generate, "run": cmd_run, "optimize": cmd_optimize, "mc": cmd_mc}[args.command](cfg)
    except MissingInput as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_MISSING
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as err:  # anything else is a failed computation
        log.debug("computation failed", exc_info=True)
        print(f"computation failed: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
