import numpy as np
import pytest

from qnir.benchmarks import make_task
from qnir.pipeline import ReservoirCost, evaluate, naive_report
from qnir.reservoir import ReservoirConfig


@pytest.fixture(scope="module")
def narma2():
    return make_task("narma2")


def test_cost_matches_evaluation(narma2):
    cfg = ReservoirConfig(4, "ps")
    p = np.random.default_rng(0).random(cfg.n_params)
    ev = evaluate(narma2, cfg, p)
    assert ReservoirCost(narma2, cfg)(p) == pytest.approx(ev.report.mse, rel=1e-12)
    assert ev.y_hat.shape == narma2.y.shape
    assert ev.model.weights.shape == (5,)


def test_random_noise_beats_naive(narma2):
    cfg = ReservoirConfig(12, "ps")
    p = np.random.default_rng(0).random(cfg.n_params)
    assert evaluate(narma2, cfg, p).report.nmse < naive_report(narma2).nmse


def test_zero_noise_is_degenerate(narma2):
    cfg = ReservoirConfig(4, "le")
    ev = evaluate(narma2, cfg, np.zeros(cfg.n_params))
    assert ev.features.is_degenerate()
    # only the intercept is left, so the prediction is the training mean
    np.testing.assert_allclose(ev.y_hat, narma2.y[narma2.split.train].mean())


def test_validation_objective_ignores_test_targets(narma2):
    cfg = ReservoirConfig(4, "ps")
    p = np.random.default_rng(1).random(cfg.n_params)
    a = ReservoirCost(narma2, cfg, objective="validation")(p)
    spoiled = make_task("narma2")
    spoiled.y[spoiled.split.test] = 99.0
    assert ReservoirCost(spoiled, cfg, objective="validation")(p) == a
    assert ReservoirCost(spoiled, cfg)(p) != ReservoirCost(narma2, cfg)(p)


def test_washout_mismatch(narma2):
    with pytest.raises(ValueError):
        ReservoirCost(narma2, ReservoirConfig(4, "ps", washout=10))
    with pytest.raises(ValueError):
        ReservoirCost(narma2, ReservoirConfig(4, "ps"), objective="train")
