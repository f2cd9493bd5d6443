"""Compiled inner loops for the implicit stepper."""
import numpy as np
from numba import njit


@njit(cache=True)
def cayley_rows(rows, diag, off, rowphase):
    """In place: row <- 2 M^-1 (p row) - p row for every row, M = tridiag(off, diag, off).

    ``rowphase`` (one factor per row) is applied first.  M must be diagonally
    dominant (true for 1 + i dt H / 2 with a non-negative potential), so the
    sweep runs without pivoting.
    """
    n = diag.size
    cp = np.empty(n, np.complex128)
    inv = np.empty(n, np.complex128)
    inv[0] = 1.0 / diag[0]
    cp[0] = off * inv[0]
    for i in range(1, n):
        inv[i] = 1.0 / (diag[i] - off * cp[i - 1])
        cp[i] = off * inv[i]
    dp = np.empty(n, np.complex128)
    for r in range(rows.shape[0]):
        ph = rowphase[r]
        row = rows[r]
        for i in range(n):
            row[i] *= ph
        dp[0] = 2.0 * row[0] * inv[0]
        for i in range(1, n):
            dp[i] = (2.0 * row[i] - off * dp[i - 1]) * inv[i]
        x = dp[n - 1]
        row[n - 1] = x - row[n - 1]
        for i in range(n - 2, -1, -1):
            x = dp[i] - cp[i] * x
            row[i] = x - row[i]
    return rows


@njit(cache=True)
def cayley_cols(cols, diag, off, colphase):
    """Column-major twin of :func:`cayley_rows`: the solve runs down axis 0 for every column at once."""
    n, m = cols.shape
    cp = np.empty(n, np.complex128)
    inv = np.empty(n, np.complex128)
    inv[0] = 1.0 / diag[0]
    cp[0] = off * inv[0]
    for i in range(1, n):
        inv[i] = 1.0 / (diag[i] - off * cp[i - 1])
        cp[i] = off * inv[i]
    dp = np.empty((n, m), np.complex128)
    for j in range(m):
        cols[0, j] *= colphase[j]
        dp[0, j] = 2.0 * cols[0, j] * inv[0]
    for i in range(1, n):
        for j in range(m):
            cols[i, j] *= colphase[j]
            dp[i, j] = (2.0 * cols[i, j] - off * dp[i - 1, j]) * inv[i]
    for j in range(m):
        cols[n - 1, j] = dp[n - 1, j] - cols[n - 1, j]
    for i in range(n - 2, -1, -1):
        for j in range(m):
            # dp[i] now holds x[i]
            dp[i, j] = dp[i, j] - cp[i] * dp[i + 1, j]
            cols[i, j] = dp[i, j] - cols[i, j]
    return cols
