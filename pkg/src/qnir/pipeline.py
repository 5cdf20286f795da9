"""Task-level glue: reservoir features -> readout -> metrics, and the MSE cost."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import metrics
from .benchmarks import TaskBundle
from .readout import ReadoutModel, fit, predict
from .reservoir import FeatureMatrix, ReservoirConfig, check_noise, run_reservoir


@dataclass
class Evaluation:
    features: FeatureMatrix
    model: ReadoutModel
    y_hat: np.ndarray
    report: metrics.MetricReport


@dataclass
class ReservoirCost:
    """p -> MSE of the readout prediction on the scoring range of ``task``.

    The readout is fitted on the training range. By default the score is taken
    on the test range; ``objective="validation"`` instead holds out the last
    ``validation_fraction`` of the training range and never touches the test data.
    """

    task: TaskBundle
    cfg: ReservoirConfig
    bias: bool = True
    ridge: float = 0.0
    objective: str = "test"
    validation_fraction: float = 0.2

    def __post_init__(self):
        if self.objective not in ("test", "validation"):
            raise ValueError("objective must be 'test' or 'validation'")
        if self.cfg.washout != self.task.split.washout:
            raise ValueError("reservoir washout and task split disagree")

    @property
    def ranges(self) -> tuple[slice, slice]:
        sp = self.task.split
        if self.objective == "test":
            return sp.train, sp.test
        cut = sp.train_end - max(2, int(round((sp.train_end - sp.washout) * self.validation_fraction)))
        return slice(sp.washout, cut), slice(cut, sp.train_end)

    def __call__(self, p) -> float:
        train, score = self.ranges
        X = run_reservoir(self.task.u, self.cfg, p).design(self.bias)
        model = fit(X[:, train], self.task.y[train], self.ridge)
        return metrics.mse(self.task.y[score], predict(model, X[:, score]))


def evaluate(task: TaskBundle, cfg: ReservoirConfig, p, bias: bool = True, ridge: float = 0.0) -> Evaluation:
    """Fit on the train range and report test-range metrics."""
    p = check_noise(p, cfg)
    sp = task.split
    F = run_reservoir(task.u, cfg, p)
    X = F.design(bias)
    model = fit(X[:, sp.train], task.y[sp.train], ridge)
    y_hat = predict(model, X)
    y = task.y
    rep = metrics.report(y[sp.test], y_hat[sp.test], y[sp.test.start - 1 : sp.test.stop])
    return Evaluation(F, model, y_hat, rep)


def naive_report(task: TaskBundle) -> metrics.MetricReport:
    """Persistence-forecast metrics on the test range."""
    sp = task.split
    y = task.y
    scale = y[sp.test.start - 1 : sp.test.stop]
    y_hat = metrics.naive_forecast(scale)
    return metrics.report(y[sp.test], y_hat, scale)
