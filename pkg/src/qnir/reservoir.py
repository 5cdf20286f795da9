"""Noisy reservoir circuits and their Z-expectation feature signals.

One time step encodes a value ``u`` into every ``RX`` of a layer and every
``RZ`` of the ZZ entanglers (``CX . RZ . CX``); every gate is followed by a
reset channel on each qubit it touched.  Channels are numbered row by row
over the circuit diagram: all channels on qubit 0 in time order, then all
channels on qubit 1, and so on.  For two qubits this gives

    q0: RX p0 . CX p1 . . . CX p2
    q1: RX p3 . CX p4 RZ p5 CX p6

A pair-separable (PS) register is a tensor product of independent two-qubit
blocks, which :func:`run_reservoir_ps_blocks` simulates as a batch of 4x4
density matrices.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from . import quantum as qc
from .quantum import Gate


class Scheme(str, enum.Enum):
    PS = "ps"
    LE = "le"


def pairs(scheme: Union[Scheme, str], n: int) -> list[tuple[int, int]]:
    scheme = Scheme(scheme)
    if n < 2:
        raise ValueError("an entangled reservoir needs at least 2 qubits")
    if scheme is Scheme.PS:
        if n % 2:
            raise ValueError("pair-separable reservoirs need an even qubit count")
        return [(i, i + 1) for i in range(0, n, 2)]
    return [(i, i + 1) for i in range(n - 1)]


def param_count(scheme: Union[Scheme, str], n: int) -> int:
    """Number of reset probabilities: 7n/2 for PS, 6n - 5 for LE."""
    return n + 5 * len(pairs(scheme, n))


@dataclass(frozen=True)
class ReservoirConfig:
    n: int
    scheme: Scheme = Scheme.PS
    scale: float = 1.0
    offset: float = 0.0
    washout: int = 20

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        pairs(self.scheme, self.n)
        if self.washout < 0:
            raise ValueError("washout must be non-negative")

    @property
    def n_params(self) -> int:
        return param_count(self.scheme, self.n)

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return pairs(self.scheme, self.n)

    def angle(self, u):
        return self.scale * np.asarray(u, dtype=float) + self.offset

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "scheme": self.scheme.value,
            "scale": self.scale,
            "offset": self.offset,
            "washout": self.washout,
        }


def check_noise(p, cfg: ReservoirConfig) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (cfg.n_params,):
        raise ValueError(f"expected {cfg.n_params} noise probabilities, got shape {p.shape}")
    if np.any(~np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("noise probabilities must lie in [0, 1]")
    return p


class Reset(NamedTuple):
    qubit: int
    p: float
    index: int  # position in the noise vector


Instruction = Union[Gate, Reset]


def noise_layout(cfg: ReservoirConfig) -> tuple[np.ndarray, np.ndarray]:
    """Positions of every channel in the noise vector.

    Returns ``rx[q]`` for the channel after qubit q's RX, and ``ent[k]`` with
    the five entangler channels of pair k in circuit order: control and
    target after the first CX, target after RZ, control and target after the
    second CX.
    """
    rx = np.empty(cfg.n, dtype=int)
    ent = np.empty((len(cfg.pairs), 5), dtype=int)
    k = 0
    for q in range(cfg.n):
        rx[q] = k
        k += 1
        for a, (i, j) in enumerate(cfg.pairs):
            slots = (0, 3) if q == i else (1, 2, 4) if q == j else ()
            for s in slots:
                ent[a, s] = k
                k += 1
    return rx, ent


def build_step(u_t: float, cfg: ReservoirConfig, p) -> list[Instruction]:
    """Ordered gate/reset instruction list for one noisy time step."""
    p = check_noise(p, cfg)
    rx, ent = noise_layout(cfg)
    theta = float(cfg.angle(u_t))
    out: list[Instruction] = []

    def reset(q, k):
        return Reset(q, p[k], int(k))

    for q in range(cfg.n):
        out += [Gate("RX", (q,), theta), reset(q, rx[q])]
    for (i, j), e in zip(cfg.pairs, ent):
        out += [Gate("CX", (i, j)), reset(i, e[0]), reset(j, e[1])]
        out += [Gate("RZ", (j,), theta), reset(j, e[2])]
        out += [Gate("CX", (i, j)), reset(i, e[3]), reset(j, e[4])]
    return out


def _step_inplace(rho: np.ndarray, u_t: float, cfg: ReservoirConfig, p: np.ndarray) -> None:
    n = cfg.n
    for ins in build_step(u_t, cfg, p):
        if isinstance(ins, Gate):
            qc.gate_inplace(rho, ins, n)
        else:
            qc.reset_inplace(rho, ins.qubit, ins.p, n)


def evolve_step(rho: np.ndarray, u_t: float, cfg: ReservoirConfig, p) -> tuple[np.ndarray, np.ndarray]:
    """Apply one noisy step; return the new state and its ``<Z_i>`` vector."""
    if qc.n_qubits(rho) != cfg.n:
        raise ValueError(f"state has {qc.n_qubits(rho)} qubits, config expects {cfg.n}")
    out = np.array(rho, dtype=complex, order="C", copy=True)
    _step_inplace(out, u_t, cfg, check_noise(p, cfg))
    return out, qc.z_expectations(out)


@dataclass
class FeatureMatrix:
    """``signals[i, t] = <Z_i>`` after step ``t``; columns before ``washout`` are transient."""

    signals: np.ndarray
    washout: int = 0

    @property
    def n_signals(self) -> int:
        return self.signals.shape[0]

    @property
    def n_steps(self) -> int:
        return self.signals.shape[1]

    def design(self, bias: bool = True) -> np.ndarray:
        if not bias:
            return self.signals
        return np.vstack([self.signals, np.ones((1, self.n_steps))])

    def is_degenerate(self, tol: float = 1e-10) -> bool:
        """True when every signal is identically zero (the noise-free case)."""
        return bool(np.all(np.abs(self.signals) < tol))

    def to_csv(self, path, bias: bool = True) -> None:
        X = self.design(bias)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["signal"] + [str(t) for t in range(self.n_steps)])
            for i, row in enumerate(X):
                name = f"q{i}" if i < self.n_signals else "bias"
                w.writerow([name] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path, washout: int = 0) -> "FeatureMatrix":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        rows = [r for r in rows if r[0] != "bias"]
        return cls(np.array([[float(v) for v in r[1:]] for r in rows]), washout)


def run_reservoir(
    u: Sequence[float],
    cfg: ReservoirConfig,
    p,
    rho0: Optional[np.ndarray] = None,
    method: str = "auto",
) -> FeatureMatrix:
    """Feature signals for the whole input sequence, starting from |+>^n.

    ``method`` is ``"full"`` (dense register, capped at 12 qubits),
    ``"blocks"`` (PS only) or ``"auto"`` (blocks whenever the scheme allows
    and no custom initial state is given).
    """
    u = np.asarray(u, dtype=float)
    p = check_noise(p, cfg)
    if len(u) < cfg.washout + 2:
        raise ValueError(f"sequence of length {len(u)} too short for washout {cfg.washout}")
    if method not in ("auto", "full", "blocks"):
        raise ValueError(f"unknown method {method!r}")
    if method == "blocks" or (method == "auto" and cfg.scheme is Scheme.PS and rho0 is None):
        if rho0 is not None:
            raise ValueError("block simulation always starts from |+>^n")
        return run_reservoir_ps_blocks(u, cfg, p)

    rho = qc.make_plus_state(cfg.n) if rho0 is None else np.array(rho0, dtype=complex, order="C", copy=True)
    if qc.n_qubits(rho) != cfg.n:
        raise ValueError("initial state does not match the qubit count")
    signals = np.empty((cfg.n, len(u)))
    for t, u_t in enumerate(u):
        _step_inplace(rho, u_t, cfg, p)
        signals[:, t] = qc.z_expectations(rho)
    return FeatureMatrix(signals, cfg.washout)


# --- pair-separable fast path -------------------------------------------------

_CX_PERM = np.array([0, 1, 3, 2])


def _block_noise(cfg: ReservoirConfig, p: np.ndarray) -> np.ndarray:
    """Rearrange the noise vector into one row of 7 per pair.

    Row layout: RX channel of each qubit, then the pair's five entangler channels.
    """
    rx, ent = noise_layout(cfg)
    return np.hstack([p[rx].reshape(-1, 2), p[ent]])


def _reset_batch(rho: np.ndarray, q: int, p: np.ndarray) -> np.ndarray:
    # rho: (B, 4, 4); view as (B, a0, a1, b0, b1)
    t = rho.reshape(-1, 2, 2, 2, 2)
    if q == 0:
        partial = t[:, 0, :, 0, :] + t[:, 1, :, 1, :]
        fresh = np.zeros_like(t)
        fresh[:, 0, :, 0, :] = partial
    else:
        partial = t[:, :, 0, :, 0] + t[:, :, 1, :, 1]
        fresh = np.zeros_like(t)
        fresh[:, :, 0, :, 0] = partial
    w = p[:, None, None]
    return (1.0 - w) * rho + w * fresh.reshape(rho.shape)


def _conj(rho: np.ndarray, u: np.ndarray) -> np.ndarray:
    return u @ rho @ u.conj().T


def run_reservoir_ps_blocks(u: Sequence[float], cfg: ReservoirConfig, p) -> FeatureMatrix:
    """Simulate a PS reservoir as ``n/2`` independent two-qubit blocks.

    All blocks share the encoding angles, so they are evolved together as one
    ``(n/2, 4, 4)`` batch.
    """
    if cfg.scheme is not Scheme.PS:
        raise ValueError("block simulation requires the pair-separable scheme")
    u = np.asarray(u, dtype=float)
    P = _block_noise(cfg, check_noise(p, cfg))
    n_blocks = P.shape[0]
    rho = np.full((n_blocks, 4, 4), 0.25, dtype=complex)
    signals = np.empty((n_blocks, 2, len(u)))
    for t, theta in enumerate(cfg.angle(u)):
        r = qc.rx(theta)
        rho = _reset_batch(_conj(rho, np.kron(r, qc.I2)), 0, P[:, 0])
        rho = _reset_batch(_conj(rho, np.kron(qc.I2, r)), 1, P[:, 1])
        rho = rho[:, _CX_PERM][:, :, _CX_PERM]
        rho = _reset_batch(_reset_batch(rho, 0, P[:, 2]), 1, P[:, 3])
        rho = _conj(rho, np.kron(qc.I2, qc.rz(theta)))
        rho = _reset_batch(rho, 1, P[:, 4])
        rho = rho[:, _CX_PERM][:, :, _CX_PERM]
        rho = _reset_batch(_reset_batch(rho, 0, P[:, 5]), 1, P[:, 6])
        d = np.real(np.einsum("bii->bi", rho))
        signals[:, 0, t] = d[:, 0] + d[:, 1] - d[:, 2] - d[:, 3]
        signals[:, 1, t] = d[:, 0] - d[:, 1] + d[:, 2] - d[:, 3]
    return FeatureMatrix(signals.reshape(cfg.n, len(u)), cfg.washout)
