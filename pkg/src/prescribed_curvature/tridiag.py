"""Cyclic (periodic) tridiagonal solve via Sherman-Morrison around a banded solve."""

import numpy as np
from scipy.linalg import solve_banded


def solve_cyclic_tridiagonal(lower, diag, upper, rhs):
    """Solve ``lower[k] x[k-1] + diag[k] x[k] + upper[k] x[k+1] = rhs[k]`` cyclically.

    ``lower[0]`` couples row 0 to ``x[N-1]`` and ``upper[N-1]`` couples row
    N-1 to ``x[0]``. Works for real or complex coefficients.
    """
    lower = np.asarray(lower)
    diag = np.asarray(diag)
    upper = np.asarray(upper)
    rhs = np.asarray(rhs)
    n = diag.shape[0]
    if n < 3:
        raise ValueError("cyclic tridiagonal systems need at least 3 unknowns")
    dtype = np.result_type(lower, diag, upper, rhs, float)

    alpha = upper[-1]   # A[N-1, 0]
    beta = lower[0]     # A[0, N-1]
    gamma = -diag[0] if diag[0] != 0 else -1.0

    ab = np.zeros((3, n), dtype=dtype)
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    ab[1, 0] -= gamma
    ab[1, -1] -= alpha * beta / gamma

    u = np.zeros(n, dtype=dtype)
    u[0] = gamma
    u[-1] = alpha
    rhs2 = np.column_stack([rhs.astype(dtype), u])
    sol = solve_banded((1, 1), ab, rhs2, check_finite=False)
    y, z = sol[:, 0], sol[:, 1]
    vy = y[0] + beta / gamma * y[-1]
    vz = z[0] + beta / gamma * z[-1]
    denom = 1.0 + vz
    if denom == 0:
        raise np.linalg.LinAlgError("singular cyclic tridiagonal system")
    return y - z * (vy / denom)


def cyclic_tridiagonal_dense(lower, diag, upper):
    """Dense matrix of the cyclic tridiagonal operator (tests and diagnostics)."""
    n = len(diag)
    a = np.zeros((n, n), dtype=np.result_type(lower, diag, upper))
    k = np.arange(n)
    a[k, k] = diag
    a[k, (k + 1) % n] += upper
    a[k, (k - 1) % n] += lower
    return a
