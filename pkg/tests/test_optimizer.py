import math

import numpy as np
import pytest

from qnir import optimizer as O


def bowl(p):
    return float(np.sum((np.asarray(p) - 0.5) ** 2))


def rastrigin(p, shift=0.3):
    # shifted onto [0, 1]^m, global minimum 0 at p = shift
    z = 10.0 * (np.asarray(p) - shift)
    return float(10 * len(z) + np.sum(z**2 - 10 * np.cos(2 * np.pi * z)))


def test_random_init():
    a = O.random_init(42, seed=7)
    np.testing.assert_array_equal(a, O.random_init(42, seed=7))
    assert a.shape == (42,) and np.all((a >= 0) & (a < 1))
    assert 0.48 <= O.random_init(10_000, seed=1).mean() <= 0.52
    with pytest.raises(ValueError):
        O.random_init(0)


def test_check_stop_examples():
    s = O.StopSettings()
    assert O.check_stop([1.0, 1.0, 1.0, 1.0], s) == O.SMALL_CHANGES
    assert O.check_stop([4.0, 3.0, 2.0, 1.0], s) is None
    assert O.check_stop([5.0, 4.0, 3.0, 2.0, 1.0], s) == O.MAX_ITERATIONS
    assert O.check_stop([2.0, 1.0], O.StopSettings(stagnation_seconds=5.0), 10.0) == O.STAGNATION
    with pytest.raises(ValueError):
        O.check_stop([], s)


def test_dual_annealing_bowl():
    s = O.AnnealSettings(evals_per_iteration=300, seed=0, stop=O.StopSettings(max_iterations=4))
    r = O.dual_annealing(bowl, 5, s)
    assert np.max(np.abs(r.best_p - 0.5)) < 1e-3
    assert r.n_evals <= 1 + 3 * 300


def _random_search(cost, m, budget, seed):
    rng = np.random.default_rng(seed)
    return min(cost(rng.random(m)) for _ in range(budget))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_dual_annealing_beats_random_search_on_rastrigin(seed):
    s = O.AnnealSettings(evals_per_iteration=400, seed=seed, log_energy=False, stop=O.StopSettings(max_iterations=4))
    r = O.dual_annealing(rastrigin, 10, s)
    assert r.best_cost < _random_search(rastrigin, 10, r.n_evals, seed + 100)


@pytest.mark.parametrize("seed", [0, 1])
def test_evolution_beats_random_search_on_rastrigin(seed):
    s = O.EvoSettings(evals_per_iteration=400, seed=seed, stop=O.StopSettings(max_iterations=4))
    r = O.evolutionary_optimize(rastrigin, 10, s)
    assert r.best_cost < _random_search(rastrigin, 10, r.n_evals, seed + 100)


@pytest.mark.parametrize("which", ["da", "eo"])
def test_history_monotone_and_bounded(which):
    stop = O.StopSettings(max_iterations=5, patience=10)
    if which == "da":
        r = O.dual_annealing(rastrigin, 6, O.AnnealSettings(evals_per_iteration=100, seed=3, stop=stop))
    else:
        r = O.evolutionary_optimize(bowl, 6, O.EvoSettings(evals_per_iteration=100, seed=3, stop=stop))
    h = np.array(r.history)
    assert len(h) == 5 and r.stop_reason == O.MAX_ITERATIONS
    assert np.all(np.diff(h) <= 0)
    assert h[-1] == r.best_cost
    assert np.all((r.best_p >= 0) & (r.best_p <= 1))


@pytest.mark.parametrize("which", ["da", "eo"])
def test_same_seed_same_trajectory(which):
    def run():
        stop = O.StopSettings(max_iterations=3)
        if which == "da":
            return O.dual_annealing(rastrigin, 4, O.AnnealSettings(evals_per_iteration=80, seed=11, stop=stop))
        return O.evolutionary_optimize(rastrigin, 4, O.EvoSettings(evals_per_iteration=80, seed=11, stop=stop))

    a, b = run(), run()
    assert a.eval_costs == b.eval_costs
    np.testing.assert_array_equal(a.best_p, b.best_p)


def test_non_finite_costs_rejected():
    calls = []

    def cost(p):
        calls.append(p)
        return math.nan if p[0] > 0.5 else bowl(p)

    r = O.dual_annealing(cost, 3, O.AnnealSettings(evals_per_iteration=60, seed=0, stop=O.StopSettings(max_iterations=3)))
    assert math.isfinite(r.best_cost) and r.best_p[0] <= 0.5
    assert len(calls) == r.n_evals


def test_failing_evaluations_are_caught():
    def cost(p):
        if p[1] < 0.3:
            raise ValueError("bad point")
        return bowl(p)

    r = O.evolutionary_optimize(cost, 3, O.EvoSettings(evals_per_iteration=40, seed=0, stop=O.StopSettings(max_iterations=2)))
    assert math.isfinite(r.best_cost)


def test_x0_is_history_start():
    x0 = np.full(4, 0.9)
    r = O.dual_annealing(bowl, 4, O.AnnealSettings(evals_per_iteration=50, seed=0, stop=O.StopSettings(max_iterations=2)), x0=x0)
    assert r.history[0] == pytest.approx(bowl(x0))
    assert r.improvement_orders() > 0


def test_evo_settings_validation():
    with pytest.raises(ValueError):
        O.evolutionary_optimize(bowl, 2, O.EvoSettings(population=3))


def test_visiting_distribution_is_heavy_tailed():
    v = O.VisitingDistribution(2.62, np.random.default_rng(0))
    x = v.sample(1.0, 20_000)
    assert np.all(np.isfinite(x))
    # far more mass beyond 5 scale units than a Gaussian would carry
    assert np.mean(np.abs(x) > 5 * np.median(np.abs(x))) > 0.01


def test_threaded_evaluation_matches_serial():
    s = O.EvoSettings(evals_per_iteration=60, seed=5, stop=O.StopSettings(max_iterations=2))
    a = O.evolutionary_optimize(bowl, 4, s, workers=1)
    b = O.evolutionary_optimize(bowl, 4, s, workers=3)
    assert a.eval_costs == b.eval_costs


def test_history_csv(tmp_path):
    r = O.OptimizationResult(np.zeros(2), 1e-3, [1e-1, 1e-2, 1e-3], 10, O.MAX_ITERATIONS)
    r.history_to_csv(tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text().splitlines() == ["iteration,best_mse", "0,0.1", "1,0.01", "2,0.001"]
    assert r.improvement_orders() == pytest.approx(2.0)
