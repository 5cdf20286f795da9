"""Benchmark task generators: NARMA-n, Mackey-Glass and memory-capacity probes."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

NARMA_INPUT = (2.11, 3.73, 4.11, 100.0)
NARMA_COEFFS = (0.3, 0.05, 1.5, 0.1)
NARMA2_INIT = (0.196, 0.19468)

TASKS = ("narma2", "narma5", "narma10", "mg19", "mg25")


class GenerationError(RuntimeError):
    pass


def narma_input(N: int, a: float = 2.11, b: float = 3.73, c: float = 4.11, T: float = 100.0) -> np.ndarray:
    """Smooth product-of-sines input, bounded in [0, 0.2]."""
    if N < 1:
        raise ValueError("length must be positive")
    t = np.arange(N, dtype=float)
    w = 2.0 * np.pi * t / T
    return 0.1 * np.sin(a * w) * np.sin(b * w) * np.sin(c * w) + 0.1


def narma2(u) -> np.ndarray:
    """y[t+1] = 0.4 y[t] + 0.4 y[t] y[t-1] + 0.6 u[t]^3 + 0.1, aligned with ``u``."""
    u = np.asarray(u, dtype=float)
    if len(u) < 3:
        raise ValueError("NARMA2 needs at least 3 input values")
    y = np.empty(len(u))
    y[0], y[1] = NARMA2_INIT
    for t in range(1, len(u) - 1):
        y[t + 1] = 0.4 * y[t] + 0.4 * y[t] * y[t - 1] + 0.6 * u[t] ** 3 + 0.1
    return y


def narma_general(
    u,
    order: int,
    alpha: float = 0.3,
    beta: float = 0.05,
    gamma: float = 1.5,
    delta: float = 0.1,
    seed_value: float = 0.196,
) -> np.ndarray:
    """Order-n NARMA recursion aligned index-wise with ``u``.

    The first ``order - 1`` entries are the zero initials and ``y[order-1]``
    is ``seed_value``; from there

        y[t+1] = alpha y[t] + beta y[t] sum_{i<order} y[t-i] + gamma u[t-order+1] u[t] + delta.

    The zero initials are transient and always fall inside the washout.
    """
    u = np.asarray(u, dtype=float)
    if order < 1:
        raise ValueError("order must be positive")
    if len(u) <= order:
        raise ValueError(f"input of length {len(u)} is too short for order {order}")
    y = np.zeros(len(u))
    y[order - 1] = seed_value
    for t in range(order - 1, len(u) - 1):
        window = y[t - order + 1 : t + 1].sum()
        y[t + 1] = alpha * y[t] + beta * y[t] * window + gamma * u[t - order + 1] * u[t] + delta
    return y


@dataclass(frozen=True)
class MackeyGlassSpec:
    tau: int = 19
    x0: float = 1.2
    a: float = 0.2
    b: float = 0.1
    n: float = 10.0
    length: int = 800
    downsample: int = 2
    h: float = 1.0


def mackey_glass_series(spec: MackeyGlassSpec, t_end: float) -> np.ndarray:
    """Integrate dx/dt = a x(t-tau) / (1 + x(t-tau)^n) - b x(t) on [0, t_end].

    Fixed-step RK4 with constant history ``x0`` for t <= 0. Delayed values at
    RK4 half steps come from cubic Hermite interpolation between stored grid
    points, using the stored derivatives. Returns samples at integer times.
    """
    h = spec.h
    per_unit = int(round(1.0 / h))
    lag = int(round(spec.tau / h))
    if abs(per_unit * h - 1.0) > 1e-12 or abs(lag * h - spec.tau) > 1e-12:
        raise ValueError("step must divide both one time unit and the delay")
    if lag < 1:
        raise ValueError("delay must be at least one integration step")
    steps = int(round(t_end / h))
    x = np.empty(steps + 1)
    dx = np.empty(steps + 1)
    x[0] = spec.x0

    def rhs(xt, xd):
        return spec.a * xd / (1.0 + xd**spec.n) - spec.b * xt

    def delayed(k, s):
        # value at grid index k + s, s in {0, 0.5}; history before index 0
        if k < 0 or (k == 0 and s == 0.0):
            return spec.x0 if k < 0 else x[0]
        if s == 0.0:
            return x[k]
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        return h00 * x[k] + h10 * h * dx[k] + h01 * x[k + 1] + h11 * h * dx[k + 1]

    for i in range(steps):
        k = i - lag
        xd0 = delayed(k, 0.0)
        dx[i] = rhs(x[i], xd0)
        xdm = delayed(k, 0.5) if k >= 0 else spec.x0
        xd1 = delayed(k + 1, 0.0)
        k1 = h * dx[i]
        k2 = h * rhs(x[i] + 0.5 * k1, xdm)
        k3 = h * rhs(x[i] + 0.5 * k2, xdm)
        k4 = h * rhs(x[i] + k3, xd1)
        x[i + 1] = x[i] + (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        if not np.isfinite(x[i + 1]) or abs(x[i + 1]) > 1e6:
            raise GenerationError(f"Mackey-Glass integration diverged at t={(i + 1) * h}")
    return x[::per_unit]


def mackey_glass(spec: MackeyGlassSpec = MackeyGlassSpec()) -> tuple[np.ndarray, np.ndarray]:
    """Downsampled (input, target) = (x(t - tau), x(t)) for t = 0 .. length-1.

    Both sequences have ``length // downsample`` samples.
    """
    if spec.tau not in (19, 25):
        raise ValueError("only the tau = 19 and tau = 25 systems are supported")
    x = mackey_glass_series(spec, spec.length)
    delayed = np.concatenate([np.full(spec.tau, spec.x0), x[: spec.length - spec.tau]])
    target = x[: spec.length]
    return delayed[:: spec.downsample], target[:: spec.downsample]


def mc_probe(length: int, low: float, high: float, seed=None) -> np.ndarray:
    """i.i.d. uniform input on [low, high] for memory-capacity runs."""
    if high < low:
        raise ValueError("empty range")
    return np.random.default_rng(seed).uniform(low, high, size=length)


@dataclass(frozen=True)
class SplitSpec:
    """Half-open ranges: train = [washout, train_end), test = [train_end, end)."""

    washout: int
    train_end: int
    end: int

    def __post_init__(self):
        if not 0 <= self.washout < self.train_end < self.end:
            raise ValueError(f"invalid split {self}")

    @property
    def train(self) -> slice:
        return slice(self.washout, self.train_end)

    @property
    def test(self) -> slice:
        return slice(self.train_end, self.end)


NARMA_SPLIT = SplitSpec(20, 81, 100)
MG_SPLIT = SplitSpec(20, 301, 400)


@dataclass
class TaskBundle:
    name: str
    u: np.ndarray
    y: np.ndarray
    split: SplitSpec
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.u.shape != self.y.shape:
            raise ValueError("input and target must have the same length")
        if self.split.end > len(self.u):
            raise ValueError("split extends past the end of the series")

    def __len__(self):
        return len(self.u)

    def to_csv(self, path) -> None:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "u", "y"])
            for t, (a, b) in enumerate(zip(self.u, self.y)):
                w.writerow([t, repr(float(a)), repr(float(b))])
        sidecar = {"name": self.name, "split": asdict(self.split), "params": self.params}
        path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))

    @classmethod
    def from_csv(cls, path) -> "TaskBundle":
        path = Path(path)
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        meta = json.loads(path.with_suffix(".json").read_text())
        u = np.array([float(r["u"]) for r in rows])
        y = np.array([float(r["y"]) for r in rows])
        return cls(meta["name"], u, y, SplitSpec(**meta["split"]), meta.get("params", {}))


def make_task(name: str, length: Optional[int] = None) -> TaskBundle:
    """Build one of the named benchmark tasks with its standard split."""
    name = name.lower()
    if name.startswith("narma"):
        order = int(name[5:]) if name[5:].isdigit() else None
        if order not in (2, 5, 10):
            raise ValueError(f"unknown task {name!r}")
        N = length or 100
        u = narma_input(N)
        y = narma2(u) if order == 2 else narma_general(u, order, *NARMA_COEFFS)
        split = NARMA_SPLIT if N == 100 else _scaled_split(N, NARMA_SPLIT)
        return TaskBundle(name, u, y, split, {"order": order, "length": N, "input": list(NARMA_INPUT)})
    if name in ("mg19", "mg25"):
        spec = MackeyGlassSpec(tau=int(name[2:]))
        u, y = mackey_glass(spec)
        if length is not None and length != len(u):
            raise ValueError("Mackey-Glass tasks have a fixed length of 400")
        return TaskBundle(name, u, y, MG_SPLIT, asdict(spec))
    raise ValueError(f"unknown task {name!r}; expected one of {', '.join(TASKS)}")


def _scaled_split(N: int, ref: SplitSpec) -> SplitSpec:
    washout = min(ref.washout, max(N // 5, 1))
    train_end = max(washout + 1, int(round(N * ref.train_end / ref.end)))
    return SplitSpec(washout, min(train_end, N - 1), N)
