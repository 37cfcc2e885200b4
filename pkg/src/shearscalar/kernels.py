"""Compiled inner loops: complex tridiagonal (cyclic) Thomas solves and
Crank-Nicolson time stepping.

The Crank-Nicolson update for du/dt = L u with tridiagonal L is

    (I - dt/2 L) u_{n+1} = (I + dt/2 L) u_n,

solved by a prefactored Thomas recursion; the periodic (cyclic) case uses the
Sherman-Morrison rank-one correction.  The system matrix is strictly
diagonally dominant for every dt > 0 (the symmetric part of -L is positive
semidefinite), so the factorization never encounters a zero pivot.
"""

import numpy as np
from numba import njit

__all__ = ["thomas_solve", "cyclic_thomas_solve", "cn_evolve_chunk"]


@njit(cache=True, nogil=True)
def thomas_solve(lower, diag, upper, rhs):
    """Solve the tridiagonal system with sub/super-diagonals lower/upper."""
    n = diag.shape[0]
    cp = np.empty(n - 1, dtype=np.complex128)
    z = np.empty(n, dtype=np.complex128)
    inv = 1.0 / diag[0]
    cp[0] = upper[0] * inv
    z[0] = rhs[0] * inv
    for j in range(1, n):
        inv = 1.0 / (diag[j] - lower[j - 1] * cp[j - 1])
        if j < n - 1:
            cp[j] = upper[j] * inv
        z[j] = (rhs[j] - lower[j - 1] * z[j - 1]) * inv
    x = np.empty(n, dtype=np.complex128)
    x[n - 1] = z[n - 1]
    for j in range(n - 2, -1, -1):
        x[j] = z[j] - cp[j] * x[j + 1]
    return x


@njit(cache=True, nogil=True)
def cyclic_thomas_solve(lower, diag, upper, corner, rhs):
    """Solve the cyclic tridiagonal system with wrap entries ``corner``."""
    n = diag.shape[0]
    gamma = -diag[0]
    d = diag.copy()
    d[0] -= gamma
    d[n - 1] -= corner * corner / gamma
    x = thomas_solve(lower, d, upper, rhs)
    u = np.zeros(n, dtype=np.complex128)
    u[0] = gamma
    u[n - 1] = corner
    q = thomas_solve(lower, d, upper, u)
    vx = x[0] + (corner / gamma) * x[n - 1]
    vq = q[0] + (corner / gamma) * q[n - 1]
    fac = vx / (1.0 + vq)
    return x - fac * q


@njit(cache=True, nogil=True)
def cn_evolve_chunk(op_diag, op_off, op_corner, damp, dt, u, n_steps):
    """Advance u by n_steps Crank-Nicolson steps for du/dt = L u, in place.

    op_diag (complex), op_off (real off-diagonal value per edge) and op_corner
    (wrap entry, 0 for non-periodic) describe the tridiagonal operator L.
    ``damp`` multiplies the state once per step with an exact scalar factor
    (used for the diagonal x-diffusion term, which commutes with L).
    """
    n = u.shape[0]
    cyclic = op_corner != 0.0

    a_diag = 1.0 - 0.5 * dt * op_diag
    b_diag = 1.0 + 0.5 * dt * op_diag
    a_off = -0.5 * dt * op_off
    b_off = 0.5 * dt * op_off
    a_cor = -0.5 * dt * op_corner
    b_cor = 0.5 * dt * op_corner

    # Sherman-Morrison splitting for the cyclic case
    gamma = -a_diag[0]
    d = a_diag.copy()
    if cyclic:
        d[0] -= gamma
        d[n - 1] -= a_cor * a_cor / gamma

    # prefactor the Thomas recursion for the constant matrix
    cp = np.empty(n - 1, dtype=np.complex128)
    inv = np.empty(n, dtype=np.complex128)
    inv[0] = 1.0 / d[0]
    cp[0] = a_off[0] * inv[0]
    for j in range(1, n):
        inv[j] = 1.0 / (d[j] - a_off[j - 1] * cp[j - 1])
        if j < n - 1:
            cp[j] = a_off[j] * inv[j]

    q = np.zeros(n, dtype=np.complex128)
    vq = 0.0 + 0.0j
    if cyclic:
        z = np.empty(n, dtype=np.complex128)
        z[0] = gamma * inv[0]
        for j in range(1, n):
            rj = a_cor if j == n - 1 else 0.0 + 0.0j
            z[j] = (rj - a_off[j - 1] * z[j - 1]) * inv[j]
        q[n - 1] = z[n - 1]
        for j in range(n - 2, -1, -1):
            q[j] = z[j] - cp[j] * q[j + 1]
        vq = q[0] + (a_cor / gamma) * q[n - 1]

    rhs = np.empty(n, dtype=np.complex128)
    z = np.empty(n, dtype=np.complex128)
    x = np.empty(n, dtype=np.complex128)
    for _ in range(n_steps):
        rhs[0] = b_diag[0] * u[0] + b_off[0] * u[1]
        for j in range(1, n - 1):
            rhs[j] = b_off[j - 1] * u[j - 1] + b_diag[j] * u[j] + b_off[j] * u[j + 1]
        rhs[n - 1] = b_off[n - 2] * u[n - 2] + b_diag[n - 1] * u[n - 1]
        if cyclic:
            rhs[0] += b_cor * u[n - 1]
            rhs[n - 1] += b_cor * u[0]

        z[0] = rhs[0] * inv[0]
        for j in range(1, n):
            z[j] = (rhs[j] - a_off[j - 1] * z[j - 1]) * inv[j]
        x[n - 1] = z[n - 1]
        for j in range(n - 2, -1, -1):
            x[j] = z[j] - cp[j] * x[j + 1]

        if cyclic:
            vx = x[0] + (a_cor / gamma) * x[n - 1]
            fac = vx / (1.0 + vq)
            for j in range(n):
                u[j] = (x[j] - fac * q[j]) * damp
        else:
            for j in range(n):
                u[j] = x[j] * damp
    return u
