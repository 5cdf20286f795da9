import json

import numpy as np
import pytest

from qnir.cli import DEFAULTS, ExperimentConfig, main


def run(*argv):
    return main([str(a) for a in argv])


def test_generate_narma2(tmp_path):
    assert run("generate", "--task", "narma2", "--len", 100, "--out", tmp_path) == 0
    rows = (tmp_path / "task.csv").read_text().splitlines()
    assert rows[0] == "t,u,y" and len(rows) == 101
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert set(manifest["files"]) == {"config.json", "task.csv", "task.json"}


def test_generate_mg19(tmp_path):
    assert run("generate", "--task", "mg19", "--out", tmp_path) == 0
    assert len((tmp_path / "task.csv").read_text().splitlines()) == 401


def test_invalid_task_is_usage_error(tmp_path):
    out = tmp_path / "bad"
    assert run("generate", "--task", "lorenz", "--out", out) == 2
    assert not out.exists()


def test_bad_flags_are_usage_errors(tmp_path):
    assert run("run", "--scheme", "full") == 2
    assert run("frobnicate") == 2
    assert run("run", "--qubits", 3, "--scheme", "ps", "--out", tmp_path / "x") == 2


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"reservoir": {"qubits": 4}}))
    assert run("run", "--config", cfg) == 2
    cfg.write_text("{not json")
    assert run("run", "--config", cfg) == 2
    assert run("run", "--config", tmp_path / "missing.json") == 1


def test_missing_inputs(tmp_path):
    assert run("run", "--task-file", tmp_path / "nope.csv", "--out", tmp_path / "o") == 1
    assert run("run", "--task", "narma2", "--p", tmp_path / "nope.json", "--out", tmp_path / "o") == 1
    assert run("mc", "--task", "narma2", "--out", tmp_path / "o") == 1
    assert run("report", tmp_path / "empty") == 1


def test_zero_noise_run_flags_degenerate(tmp_path, capsys):
    assert run("run", "--task", "narma2", "--qubits", 4, "--zero-noise", "--out", tmp_path) == 0
    doc = json.loads((tmp_path / "metrics.json").read_text())
    assert doc["degenerate_features"] is True
    assert "zero" in capsys.readouterr().err
    for name in ("features.csv", "weights.json", "metrics.json", "config.json", "manifest.json"):
        assert (tmp_path / name).exists()


def test_run_is_deterministic(tmp_path):
    for d in ("a", "b"):
        assert run("run", "--task", "narma5", "--qubits", 4, "--seed", 3, "--out", tmp_path / d) == 0
    for name in ("metrics.json", "features.csv", "weights.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    a, b = (json.loads((tmp_path / d / "config.json").read_text()) for d in "ab")
    assert a.pop("out") != b.pop("out") and a == b


def test_config_merge_and_persisted_defaults(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"task": {"name": "narma10"}, "reservoir": {"n": 4}, "seed": 5}))
    assert run("run", "--config", cfg, "--seed", 9, "--out", tmp_path / "o") == 0
    eff = json.loads((tmp_path / "o" / "config.json").read_text())
    assert eff["task"]["name"] == "narma10" and eff["reservoir"]["n"] == 4 and eff["seed"] == 9
    assert eff["reservoir"]["scheme"] == "ps" and "mc" in eff


def test_config_hash_stable_under_reordering():
    a = ExperimentConfig.build({"seed": 1, "reservoir": {"scheme": "le", "n": 4}}, {})
    b = ExperimentConfig.build({"reservoir": {"n": 4, "scheme": "le"}, "seed": 1}, {})
    assert a.hash() == b.hash()
    assert a.hash() != ExperimentConfig.build({"seed": 2}, {}).hash()
    assert set(DEFAULTS) == set(a.data)


def test_run_from_generated_task_file(tmp_path):
    assert run("generate", "--task", "narma2", "--out", tmp_path / "g") == 0
    before = (tmp_path / "g" / "task.csv").read_bytes()
    assert run("run", "--task-file", tmp_path / "g" / "task.csv", "--qubits", 4, "--out", tmp_path / "r") == 0
    assert (tmp_path / "g" / "task.csv").read_bytes() == before


@pytest.fixture(scope="module")
def optimized(tmp_path_factory):
    out = tmp_path_factory.mktemp("opt")
    code = run("optimize", "--task", "narma2", "--qubits", 4, "--optimizer", "da", "--iterations", 2, "--evals", 30, "--out", out)
    assert code == 0
    return out


def test_optimize_artifacts(optimized):
    costs = (optimized / "costs.csv").read_text().splitlines()
    assert costs[0] == "iteration,best_mse" and len(costs) == 3
    best = json.loads((optimized / "best_p.json").read_text())
    assert len(best["best_p"]) == 14
    doc = json.loads((optimized / "metrics.json").read_text())
    assert doc["optimization"]["n_evals"] <= 31
    h = doc["optimization"]["history"]
    assert h[-1] <= h[0]


def test_optimize_reproducible(optimized, tmp_path):
    run("optimize", "--task", "narma2", "--qubits", 4, "--iterations", 2, "--evals", 30, "--out", tmp_path)
    assert (tmp_path / "costs.csv").read_bytes() == (optimized / "costs.csv").read_bytes()
    assert (tmp_path / "best_p.json").read_bytes() == (optimized / "best_p.json").read_bytes()


def test_run_with_stored_noise_beats_naive(optimized, tmp_path):
    assert run("run", "--task", "narma2", "--qubits", 4, "--p", optimized / "best_p.json", "--out", tmp_path) == 0
    doc = json.loads((tmp_path / "metrics.json").read_text())
    assert doc["metrics"]["nmse"] < doc["naive"]["nmse"]


def test_evolutionary_optimize(tmp_path):
    assert run("optimize", "--task", "mg19", "--qubits", 4, "--optimizer", "eo", "--iterations", 2, "--evals", 32, "--out", tmp_path) == 0
    assert len((tmp_path / "costs.csv").read_text().splitlines()) == 3


def test_wrong_noise_length(optimized, tmp_path):
    assert run("run", "--task", "narma2", "--qubits", 6, "--p", optimized / "best_p.json", "--out", tmp_path) == 2


def test_mc_outputs(optimized, tmp_path):
    args = ["mc", "--task", "narma2", "--qubits", 4, "--p", optimized / "best_p.json", "--d-max", 20]
    assert run(*args, "--trials", 2, "--out", tmp_path / "a") == 0
    rows = (tmp_path / "a" / "mf.csv").read_text().splitlines()
    assert rows[0] == "delay,mean,std" and len(rows) == 21
    doc = json.loads((tmp_path / "a" / "mc.json").read_text())
    assert doc["mc"] == pytest.approx(sum(doc["mf_mean"]))
    assert run(*args, "--trials", 1, "--out", tmp_path / "b") == 0
    std = [float(r.split(",")[2]) for r in (tmp_path / "b" / "mf.csv").read_text().splitlines()[1:]]
    assert std == [0.0] * 20


def test_report(optimized, tmp_path, capsys):
    assert run("report", optimized, "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert "Naive" in out and "PS4" in out
    assert len((tmp_path / "report.csv").read_text().splitlines()) == 3


def test_version(capsys):
    assert run("--version") == 0
