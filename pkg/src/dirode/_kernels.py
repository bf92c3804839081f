"""Compiled inner loops: lexicographic Gauss-Seidel sweeps and batched Thomas solves."""

import numpy as np
from numba import njit


@njit(cache=True)
def gs_sweep(psi, omega, dx, dy, iters):
    """In-place lexicographic Gauss-Seidel on -lap(psi) = omega, interior only."""
    ny, nx = psi.shape
    wx = 1.0 / (dx * dx)
    wy = 1.0 / (dy * dy)
    denom = 2.0 * wx + 2.0 * wy
    for _ in range(iters):
        for j in range(1, ny - 1):
            for i in range(1, nx - 1):
                psi[j, i] = ((psi[j, i + 1] + psi[j, i - 1]) * wx
                             + (psi[j + 1, i] + psi[j - 1, i]) * wy
                             + omega[j, i]) / denom


@njit(cache=True)
def thomas_batch(sub, diag, sup, rhs, out):
    """Solve m independent tridiagonal systems of size n.

    sub/sup: (m, n-1); diag/rhs/out: (m, n).  No pivoting; rows produced by the
    solvers here are diagonally dominant.
    """
    m, n = diag.shape
    cw = np.empty(n - 1)
    dw = np.empty(n)
    for k in range(m):
        beta = diag[k, 0]
        dw[0] = rhs[k, 0] / beta
        for i in range(1, n):
            cw[i - 1] = sup[k, i - 1] / beta
            beta = diag[k, i] - sub[k, i - 1] * cw[i - 1]
            dw[i] = (rhs[k, i] - sub[k, i - 1] * dw[i - 1]) / beta
        out[k, n - 1] = dw[n - 1]
        for i in range(n - 2, -1, -1):
            out[k, i] = dw[i] - cw[i] * out[k, i + 1]
