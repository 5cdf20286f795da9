"""Dense density-matrix primitives for small qubit registers.

Qubit ``0`` is the most significant bit of a basis index, i.e. the first
tensor factor: ``|q0 q1 ... q_{n-1}>``.  All operations work on the
``(2,)*2n`` tensor view of a ``2^n x 2^n`` matrix, so a one- or two-qubit
gate costs O(4^n) instead of building the full ``2^n x 2^n`` unitary.
Functions never mutate their input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels

MAX_QUBITS = 12

STATE_TOL = 1e-10
OPERATOR_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
CX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
KET0 = np.array([[1, 0], [0, 0]], dtype=complex)


class ResourceError(RuntimeError):
    """Raised when a requested register does not fit the dense simulator."""


def rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


_FIXED = {"CX": CX, "H": H, "X": X}
_ROTATIONS = {"RX": rx, "RZ": rz}
_ARITY = {"RX": 1, "RZ": 1, "H": 1, "X": 1, "CX": 2}


@dataclass(frozen=True)
class Gate:
    """A named 1- or 2-qubit gate. For ``CX`` the targets are (control, target)."""

    kind: str
    targets: tuple[int, ...]
    theta: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.targets) != _ARITY[self.kind]:
            raise ValueError(f"{self.kind} acts on {_ARITY[self.kind]} qubit(s)")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("gate targets must be distinct")
        if self.kind in _ROTATIONS and self.theta is None:
            raise ValueError(f"{self.kind} needs an angle")

    def matrix(self) -> np.ndarray:
        if self.kind in _ROTATIONS:
            return _ROTATIONS[self.kind](self.theta)
        return _FIXED[self.kind]

    def inverse(self) -> "Gate":
        if self.kind in _ROTATIONS:
            return Gate(self.kind, self.targets, -self.theta)
        return self


@dataclass(frozen=True)
class KrausChannel:
    """Single-qubit CPTP map given by its Kraus operators."""

    operators: tuple[np.ndarray, ...]
    p: Optional[float] = None
    name: str = field(default="kraus", compare=False)

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.operators)
        if not ops or any(k.shape != (2, 2) for k in ops):
            raise ValueError("Kraus operators must be a non-empty list of 2x2 matrices")
        completeness = sum(k.conj().T @ k for k in ops)
        err = np.max(np.abs(completeness - I2))
        if err > OPERATOR_TOL:
            raise ValueError(f"operators are not trace preserving (|sum K^dag K - I| = {err:.3g})")
        object.__setattr__(self, "operators", ops)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        """Apply to a single-qubit density matrix."""
        return sum(k @ rho @ k.conj().T for k in self.operators)


def _check_probability(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p}")
    return p


def reset_channel(p: float) -> KrausChannel:
    """Reset to |0> with probability ``p``: rho -> p|0><0| + (1-p) rho."""
    p = _check_probability(p)
    ops = (
        np.sqrt(1.0 - p) * I2,
        np.sqrt(p) * KET0,
        np.sqrt(p) * np.array([[0, 1], [0, 0]], dtype=complex),
    )
    return KrausChannel(ops, p=p, name="reset")


def n_qubits(rho: np.ndarray) -> int:
    dim = rho.shape[0]
    n = dim.bit_length() - 1
    if rho.ndim != 2 or rho.shape != (dim, dim) or 1 << n != dim:
        raise ValueError(f"expected a 2^n x 2^n matrix, got shape {rho.shape}")
    return n


def zero_state(n: int, max_qubits: int = MAX_QUBITS) -> np.ndarray:
    _check_size(n, max_qubits)
    rho = np.zeros((1 << n, 1 << n), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def make_plus_state(n: int, max_qubits: int = MAX_QUBITS) -> np.ndarray:
    """|+><+|^{(x) n}: every matrix entry equals 2^-n."""
    _check_size(n, max_qubits)
    dim = 1 << n
    return np.full((dim, dim), 1.0 / dim, dtype=complex)


def product_state(single: Sequence[np.ndarray]) -> np.ndarray:
    rho = np.ones((1, 1), dtype=complex)
    for s in single:
        rho = np.kron(rho, s)
    return rho


def _check_size(n: int, max_qubits: int) -> None:
    if n < 1:
        raise ValueError("need at least one qubit")
    if n > max_qubits:
        raise ResourceError(f"{n} qubits exceeds the dense-register cap of {max_qubits}")


def _check_targets(targets: Sequence[int], n: int) -> None:
    for q in targets:
        if not 0 <= q < n:
            raise IndexError(f"qubit index {q} out of range for {n} qubits")


def _contract(t: np.ndarray, op: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Multiply ``op`` (2^k x 2^k) into the tensor axes ``axes`` of ``t``."""
    k = len(axes)
    op_t = op.reshape((2,) * (2 * k))
    out = np.tensordot(op_t, t, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def apply_operator(
    rho: np.ndarray, left: np.ndarray, targets: Sequence[int], right: Optional[np.ndarray] = None
) -> np.ndarray:
    """Return ``L rho R^dag`` with L, R embedded on ``targets`` (R defaults to L)."""
    n = n_qubits(rho)
    _check_targets(targets, n)
    right = left if right is None else right
    t = rho.reshape((2,) * (2 * n))
    t = _contract(t, left, targets)
    t = _contract(t, right.conj(), [n + q for q in targets])
    return np.ascontiguousarray(t).reshape(rho.shape)


def apply_unitary(rho: np.ndarray, u: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    return apply_operator(rho, u, targets)


def apply_gate(rho: np.ndarray, gate: Gate) -> np.ndarray:
    """rho -> U rho U^dag for a named gate (in-place kernel on a copy)."""
    n = n_qubits(rho)
    _check_targets(gate.targets, n)
    out = np.array(rho, dtype=complex, order="C", copy=True)
    gate_inplace(out, gate, n)
    return out


def _mask(q: int, n: int) -> int:
    return 1 << (n - 1 - q)


def gate_inplace(rho: np.ndarray, gate: Gate, n: int) -> None:
    if gate.kind == "CX":
        c, t = gate.targets
        _kernels.cx(rho, _mask(c, n), _mask(t, n))
    elif gate.kind == "RZ":
        _kernels.phase_1q(rho, np.exp(1j * gate.theta), _mask(gate.targets[0], n))
    else:
        _kernels.unitary_1q(rho, gate.matrix(), _mask(gate.targets[0], n))


def reset_inplace(rho: np.ndarray, q: int, p: float, n: int) -> None:
    if p != 0.0:
        _kernels.reset(rho, _mask(q, n), float(p))


def apply_channel(rho: np.ndarray, channel: KrausChannel, q: int) -> np.ndarray:
    """sum_j K_j rho K_j^dag with each K_j acting on qubit ``q``."""
    return sum(apply_operator(rho, k, [q]) for k in channel.operators)


def apply_reset(rho: np.ndarray, q: int, p: float) -> np.ndarray:
    """Closed form of the reset channel on qubit ``q``.

    Same map as ``apply_channel(rho, reset_channel(p), q)``; one pass over
    the matrix instead of three Kraus products.
    """
    p = _check_probability(p)
    n = n_qubits(rho)
    _check_targets([q], n)
    out = np.array(rho, dtype=complex, order="C", copy=True)
    reset_inplace(out, q, p, n)
    return out


def apply_rzz(
    rho: np.ndarray,
    i: int,
    j: int,
    theta: float,
    noise: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """ZZ rotation as CX(i,j) RZ_j(theta) CX(i,j).

    ``noise`` holds five reset probabilities in circuit order: control and
    target after the first CX, target after RZ, control and target after
    the second CX.
    """
    if i == j:
        raise ValueError("RZZ needs two distinct qubits")
    if noise is not None and len(noise) != 5:
        raise ValueError("RZZ noise takes exactly 5 probabilities")
    p = [0.0] * 5 if noise is None else list(noise)
    rho = apply_gate(rho, Gate("CX", (i, j)))
    rho = apply_reset(apply_reset(rho, i, p[0]), j, p[1])
    rho = apply_gate(rho, Gate("RZ", (j,), theta))
    rho = apply_reset(rho, j, p[2])
    rho = apply_gate(rho, Gate("CX", (i, j)))
    return apply_reset(apply_reset(rho, i, p[3]), j, p[4])


def z_expectations(rho: np.ndarray) -> np.ndarray:
    """<Z_i> for every qubit, read off the diagonal."""
    n = n_qubits(rho)
    diag = np.real(np.diagonal(rho)).reshape((2,) * n)
    out = np.empty(n)
    for q in range(n):
        d = np.moveaxis(diag, q, 0)
        out[q] = d[0].sum() - d[1].sum()
    return out


def expect_z(rho: np.ndarray, i: int) -> float:
    n = n_qubits(rho)
    _check_targets([i], n)
    bit = (np.arange(1 << n) >> (n - 1 - i)) & 1
    z = np.sum(np.diagonal(rho) * (1 - 2 * bit))
    if abs(z.imag) > STATE_TOL:
        raise ValueError(f"<Z> has imaginary residue {z.imag:.3g}; input is not Hermitian")
    return float(z.real)


def check_density_matrix(rho: np.ndarray, tol: float = STATE_TOL, psd: bool = True) -> None:
    """Assert the trace, Hermiticity and (optionally) positivity invariants."""
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise AssertionError(f"trace deviates from 1 by {abs(tr - 1.0):.3g}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > tol:
        raise AssertionError(f"matrix is not Hermitian (max deviation {herm:.3g})")
    if psd:
        lo = np.linalg.eigvalsh(rho).min()
        if lo < -1e-9:
            raise AssertionError(f"negative eigenvalue {lo:.3g}")
