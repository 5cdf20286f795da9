# In-place numba kernels for the full-register density matrix.
# Qubit q maps to bit (n - 1 - q) of a basis index. All kernels take a
# C-contiguous complex128 (dim, dim) array and overwrite it.

import numpy as np
from numba import njit


@njit(cache=True)
def unitary_1q(rho, u, mask):
    dim = rho.shape[0]
    u00, u01, u10, u11 = u[0, 0], u[0, 1], u[1, 0], u[1, 1]
    c00, c01, c10, c11 = np.conj(u00), np.conj(u01), np.conj(u10), np.conj(u11)
    for r0 in range(dim):
        if r0 & mask:
            continue
        r1 = r0 | mask
        for k0 in range(dim):
            if k0 & mask:
                continue
            k1 = k0 | mask
            a = rho[r0, k0]
            b = rho[r0, k1]
            c = rho[r1, k0]
            d = rho[r1, k1]
            # left multiply by u
            la = u00 * a + u01 * c
            lb = u00 * b + u01 * d
            lc = u10 * a + u11 * c
            ld = u10 * b + u11 * d
            # right multiply by u^dagger
            rho[r0, k0] = la * c00 + lb * c01
            rho[r0, k1] = la * c10 + lb * c11
            rho[r1, k0] = lc * c00 + ld * c01
            rho[r1, k1] = lc * c10 + ld * c11


@njit(cache=True)
def phase_1q(rho, phase, mask):
    # diag(1, phase) conjugation: off-diagonal qubit blocks pick up phase factors
    dim = rho.shape[0]
    cph = np.conj(phase)
    for r in range(dim):
        rb = r & mask
        for k in range(dim):
            kb = k & mask
            if rb and not kb:
                rho[r, k] *= phase
            elif kb and not rb:
                rho[r, k] *= cph


@njit(cache=True)
def cx(rho, cmask, tmask):
    dim = rho.shape[0]
    # rows
    for r in range(dim):
        if (r & cmask) and not (r & tmask):
            r1 = r | tmask
            for k in range(dim):
                tmp = rho[r, k]
                rho[r, k] = rho[r1, k]
                rho[r1, k] = tmp
    # columns
    for r in range(dim):
        for k in range(dim):
            if (k & cmask) and not (k & tmask):
                k1 = k | tmask
                tmp = rho[r, k]
                rho[r, k] = rho[r, k1]
                rho[r, k1] = tmp


@njit(cache=True)
def reset(rho, mask, p):
    dim = rho.shape[0]
    keep = 1.0 - p
    for r0 in range(dim):
        if r0 & mask:
            continue
        r1 = r0 | mask
        for k0 in range(dim):
            if k0 & mask:
                continue
            k1 = k0 | mask
            rho[r0, k0] += p * rho[r1, k1]
            rho[r1, k1] *= keep
            rho[r0, k1] *= keep
            rho[r1, k0] *= keep
