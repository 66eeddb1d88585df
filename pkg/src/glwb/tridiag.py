"""Thomas elimination for tridiagonal systems."""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import InvalidInputError, NumericalFailureError


@njit(cache=True)
def thomas_inplace(lower, diag, upper, rhs, out, scratch):
    """Solve in place; ``lower[0]`` and ``upper[-1]`` are ignored.

    Returns -1 on success, otherwise the row index of the zero pivot.
    """
    n = diag.shape[0]
    pivot = diag[0]
    if pivot == 0.0 or not np.isfinite(pivot):
        return 0
    out[0] = rhs[0] / pivot
    for i in range(1, n):
        scratch[i] = upper[i - 1] / pivot
        pivot = diag[i] - lower[i] * scratch[i]
        if pivot == 0.0 or not np.isfinite(pivot):
            return i
        out[i] = (rhs[i] - lower[i] * out[i - 1]) / pivot
    for i in range(n - 2, -1, -1):
        out[i] -= scratch[i + 1] * out[i + 1]
    return -1


def tridiagonal_solve(lower, diag, upper, rhs) -> np.ndarray:
    """Solve ``A x = rhs`` for tridiagonal ``A``.

    ``lower`` and ``upper`` have length ``n - 1`` (sub- and super-diagonal),
    ``diag`` and ``rhs`` have length ``n``.
    """
    diag = np.ascontiguousarray(diag, dtype=float)
    rhs = np.ascontiguousarray(rhs, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = diag.shape[0]
    if n == 0 or rhs.shape != (n,) or lower.shape != (n - 1,) or upper.shape != (n - 1,):
        raise InvalidInputError(
            f"inconsistent tridiagonal shapes: lower {lower.shape}, diag {diag.shape}, "
            f"upper {upper.shape}, rhs {rhs.shape}"
        )
    lo = np.zeros(n)
    lo[1:] = lower
    up = np.zeros(n)
    up[:-1] = upper
    out = np.empty(n)
    status = thomas_inplace(lo, diag, up, rhs, out, np.empty(n))
    if status >= 0:
        raise NumericalFailureError(f"zero pivot at row {status}")
    return out
