import json
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qnir import metrics as M
from qnir.benchmarks import make_task
from qnir.pipeline import naive_report
from qnir.reservoir import ReservoirConfig


def test_perfect_prediction():
    y = np.array([0.3, 0.1, 0.7, 0.2])
    r = M.report(y, y)
    assert (r.mse, r.nmse, r.nrmse, r.mase) == (0.0, 0.0, 0.0, 0.0)


def test_hand_arithmetic():
    y, y_hat = np.array([1.0, 2.0, 3.0]), np.array([1.0, 2.0, 4.0])
    assert M.mse(y, y_hat) == pytest.approx(1 / 3, rel=1e-15)
    assert M.nmse(y, y_hat) == pytest.approx(1 / 14, rel=1e-15)
    assert M.nrmse(y, y_hat) == pytest.approx(np.sqrt(1 / 3) / 1.0, rel=1e-15)
    assert M.mase(y, y_hat) == pytest.approx((1 / 3) / 1.0, rel=1e-15)


def test_naive_forecast():
    np.testing.assert_array_equal(M.naive_forecast([1.0, 2.0, 4.0]), [1.0, 2.0])
    y = np.full(10, 3.0)
    assert M.mse(y[1:], M.naive_forecast(y)) == 0.0


def test_naive_mase_is_exactly_one():
    rng = np.random.default_rng(0)
    for _ in range(20):
        s = rng.standard_normal(rng.integers(3, 50))
        assert M.mase(s[1:], M.naive_forecast(s), s) == 1.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 200))
def test_nrmse_nmse_identity(seed, n):
    rng = np.random.default_rng(seed)
    y, y_hat = rng.standard_normal(n) + 0.5, rng.standard_normal(n)
    lhs = M.nrmse(y, y_hat) ** 2
    rhs = M.nmse(y, y_hat) * np.sum(y**2) / (n * np.var(y, ddof=1))
    assert abs(lhs - rhs) < 1e-10 * max(1.0, lhs)


def test_degenerate_denominators():
    with pytest.raises(M.DegenerateMetricError):
        M.nmse(np.zeros(4), np.ones(4))
    with pytest.raises(M.DegenerateMetricError):
        M.nrmse(np.ones(4), np.zeros(4))
    with pytest.raises(M.DegenerateMetricError):
        M.mase(np.ones(4), np.zeros(4))
    with pytest.raises(ValueError):
        M.mse([1.0, 2.0], [1.0])


@pytest.mark.parametrize(
    "name,nmse", [("narma2", 6.5e-6), ("narma5", 3.0e-4), ("narma10", 6.1e-4)]
)
def test_naive_narma_tables(name, nmse):
    r = naive_report(make_task(name))
    assert r.nmse == pytest.approx(nmse, rel=0.05)
    assert r.mase == 1.0


@pytest.mark.parametrize("name", ["mg19", "mg25"])
def test_naive_mackey_glass(name):
    r = naive_report(make_task(name))
    assert r.mase == 1.0
    assert 0.15 <= r.nrmse <= 0.40


def test_memory_function_bounds_and_degenerate(caplog):
    rng = np.random.default_rng(1)
    a = rng.standard_normal(100)
    assert M.memory_function(a, a) == pytest.approx(1.0)
    assert M.memory_function(a, -2 * a + 1) == pytest.approx(1.0)
    assert 0.0 <= M.memory_function(a, rng.standard_normal(100)) < 0.2
    with caplog.at_level(logging.WARNING):
        assert M.memory_function(a, np.ones(100)) == 0.0
    assert "degenerate" in caplog.text


def _mc_setup():
    cfg = ReservoirConfig(4, "ps")
    p = np.random.default_rng(0).uniform(0.05, 0.6, cfg.n_params)
    return cfg, p


def test_memory_profile_properties(tmp_path):
    cfg, p = _mc_setup()
    prof = M.memory_profile(cfg, p, (0.0, 0.2), d_max=10, trials=3, seed=1, length=400)
    assert prof.trials.shape == (3, 10)
    assert np.all((prof.trials >= 0) & (prof.trials <= 1))
    assert 0 <= prof.capacity <= 10
    assert prof.capacity == pytest.approx(prof.mean.sum())
    prof.to_csv(tmp_path / "mf.csv")
    lines = (tmp_path / "mf.csv").read_text().splitlines()
    assert lines[0] == "delay,mean,std" and len(lines) == 11
    d = json.loads(prof.to_json())
    assert d["n_trials"] == 3 and len(d["mf_mean"]) == 10


def test_memory_profile_deterministic_and_monotone_in_dmax():
    cfg, p = _mc_setup()
    a = M.memory_profile(cfg, p, (0.0, 0.2), d_max=8, trials=2, seed=4, length=300)
    b = M.memory_profile(cfg, p, (0.0, 0.2), d_max=8, trials=2, seed=4, length=300)
    np.testing.assert_array_equal(a.trials, b.trials)
    short = M.memory_profile(cfg, p, (0.0, 0.2), d_max=4, trials=2, seed=4, length=300)
    assert short.capacity <= a.capacity


def test_single_trial_std_is_zero():
    cfg, p = _mc_setup()
    prof = M.memory_profile(cfg, p, (0.0, 0.2), d_max=5, trials=1, seed=0, length=200)
    np.testing.assert_array_equal(prof.std, 0.0)


def test_memory_profile_recent_delay_is_recalled():
    cfg, p = _mc_setup()
    prof = M.memory_profile(cfg, p, (0.0, 0.2), d_max=20, trials=2, seed=0, length=600)
    assert prof.mean[0] > 0.5
    assert prof.mean[-1] < 0.1
