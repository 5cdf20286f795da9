"""Linear least-squares readout on reservoir feature columns."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass
class ReadoutModel:
    weights: np.ndarray
    train_mse: float
    ridge: float = 0.0

    def to_json(self) -> str:
        return json.dumps(
            {"weights": [float(w) for w in self.weights], "train_mse": self.train_mse, "ridge": self.ridge},
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "ReadoutModel":
        d = json.loads(text)
        return cls(np.asarray(d["weights"], dtype=float), float(d["train_mse"]), float(d.get("ridge", 0.0)))


def fit(X, y, ridge: float = 0.0) -> ReadoutModel:
    """Solve min_W ||y - W^T X||^2 (+ ridge ||W||^2) for X of shape (features, samples).

    Uses SVD-based ``lstsq``, so a rank-deficient X yields the minimum-norm
    solution.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[1] == 0:
        raise ValueError("empty training range")
    if y.shape != (X.shape[1],):
        raise ValueError(f"target length {y.shape} does not match {X.shape[1]} samples")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("training data contains non-finite values")
    if ridge < 0:
        raise ValueError("ridge penalty must be non-negative")
    A, b = X.T, y
    if ridge > 0:
        k = X.shape[0]
        A = np.vstack([A, np.sqrt(ridge) * np.eye(k)])
        b = np.concatenate([b, np.zeros(k)])
    w, *_ = np.linalg.lstsq(A, b, rcond=None)
    resid = y - w @ X
    return ReadoutModel(w, float(np.mean(resid**2)), ridge)


def predict(model: ReadoutModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != len(model.weights):
        raise ValueError(f"expected {len(model.weights)} feature rows, got shape {X.shape}")
    return model.weights @ X
