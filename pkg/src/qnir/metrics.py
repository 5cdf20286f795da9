"""Forecast error metrics and memory-capacity analysis."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

log = logging.getLogger(__name__)


class DegenerateMetricError(ValueError):
    """A metric's normaliser is zero."""


def _pair(y, y_hat):
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape or y.ndim != 1:
        raise ValueError(f"shape mismatch {y.shape} vs {y_hat.shape}")
    if len(y) < 2:
        raise ValueError("need at least two values")
    return y, y_hat


def mse(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.mean((y - y_hat) ** 2))


def nmse(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    den = np.sum(y**2)
    if den == 0:
        raise DegenerateMetricError("NMSE undefined for an all-zero target")
    return float(np.sum((y - y_hat) ** 2) / den)


def nrmse(y, y_hat) -> float:
    """RMSE divided by the sample (ddof=1) standard deviation of ``y``."""
    y, y_hat = _pair(y, y_hat)
    sd = np.std(y, ddof=1)
    if sd == 0:
        raise DegenerateMetricError("NRMSE undefined for a constant target")
    return float(np.sqrt(np.mean((y - y_hat) ** 2)) / sd)


def naive_forecast(y) -> np.ndarray:
    """One-step persistence forecast: element t predicts y[t + 1]."""
    y = np.asarray(y, dtype=float)
    if len(y) < 2:
        raise ValueError("need at least two values")
    return y[:-1].copy()


def mase(y, y_hat, scale_series=None) -> float:
    """Mean absolute error scaled by the one-step Naive MAE of ``scale_series``.

    ``scale_series`` defaults to ``y``. Passing the test targets together with
    the value just before them makes the Naive forecast score exactly 1.
    """
    y, y_hat = _pair(y, y_hat)
    ref = y if scale_series is None else np.asarray(scale_series, dtype=float)
    if len(ref) < 2:
        raise ValueError("scale series needs at least two values")
    den = np.mean(np.abs(np.diff(ref)))
    if den == 0:
        raise DegenerateMetricError("MASE undefined for a constant scale series")
    return float(np.mean(np.abs(y - y_hat)) / den)


@dataclass
class MetricReport:
    mse: float
    nmse: float
    nrmse: float
    mase: float

    def to_dict(self) -> dict:
        return asdict(self)


def report(y, y_hat, scale_series=None) -> MetricReport:
    return MetricReport(mse(y, y_hat), nmse(y, y_hat), nrmse(y, y_hat), mase(y, y_hat, scale_series))


def memory_function(y, y_hat) -> float:
    """Squared Pearson correlation; 0 when either side has no variance."""
    y, y_hat = _pair(y, y_hat)
    vy, vh = np.var(y), np.var(y_hat)
    if vy == 0 or vh == 0:
        log.warning("degenerate variance in memory function; returning 0")
        return 0.0
    cov = np.mean((y - y.mean()) * (y_hat - y_hat.mean()))
    return float(min(cov**2 / (vy * vh), 1.0))


@dataclass
class MemoryProfile:
    delays: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    trials: np.ndarray  # (n_trials, d_max)

    @property
    def capacity(self) -> float:
        return float(np.sum(self.mean))

    def to_dict(self) -> dict:
        return {
            "delays": self.delays.tolist(),
            "mf_mean": self.mean.tolist(),
            "mf_std": self.std.tolist(),
            "mc": self.capacity,
            "mc_std": float(np.std(self.trials.sum(axis=1))),
            "n_trials": int(self.trials.shape[0]),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["delay", "mean", "std"])
            for d, m, s in zip(self.delays, self.mean, self.std):
                w.writerow([int(d), repr(float(m)), repr(float(s))])


def memory_profile(
    cfg,
    p,
    input_range: tuple[float, float],
    d_max: int = 20,
    trials: int = 30,
    seed: Optional[int] = 0,
    length: int = 1000,
    train_fraction: float = 0.7,
    bias: bool = True,
) -> MemoryProfile:
    """Memory function MF_d for d = 1..d_max over independent uniform probes.

    Each trial drives the reservoir with a fresh probe, fits one readout per
    delay on [washout, split) to reconstruct u[t-d], and scores MF_d on the
    held-out remainder.
    """
    from .benchmarks import mc_probe
    from .readout import fit, predict
    from .reservoir import run_reservoir

    if trials < 1:
        raise ValueError("need at least one trial")
    if d_max < 1:
        raise ValueError("d_max must be positive")
    washout = max(cfg.washout, d_max)
    split = washout + int(round((length - washout) * train_fraction))
    if not washout < split < length - 1:
        raise ValueError("probe too short for the requested delays")
    seeds = np.random.SeedSequence(seed).spawn(trials)
    mf = np.zeros((trials, d_max))
    for k, ss in enumerate(seeds):
        u = mc_probe(length, *input_range, seed=ss)
        X = run_reservoir(u, cfg, p).design(bias)
        for d in range(1, d_max + 1):
            target = np.concatenate([np.zeros(d), u[:-d]])
            model = fit(X[:, washout:split], target[washout:split])
            y_hat = predict(model, X[:, split:])
            mf[k, d - 1] = memory_function(target[split:], y_hat)
    return MemoryProfile(np.arange(1, d_max + 1), mf.mean(axis=0), mf.std(axis=0), mf)
