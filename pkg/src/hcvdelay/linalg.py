"""Small dense complex linear solves with partial pivoting.

The center-manifold computation needs two 4x4 solves; these are done with
explicit partial-pivoted elimination and the condition number is reported
so callers can reject near-singular systems.
"""

from __future__ import annotations

import numpy as np

__all__ = ["solve_pivoted", "SingularSystemError"]


class SingularSystemError(ValueError):
    pass


def solve_pivoted(
    matrix, rhs, rcond_min: float = 1e-12
) -> tuple[np.ndarray, float]:
    """Solve M x = b by Gaussian elimination with partial pivoting.

    Returns (x, cond) where cond is the 2-norm condition number of M.
    Raises SingularSystemError when 1/cond falls below rcond_min.
    """
    a = np.array(matrix, dtype=complex)
    b = np.array(rhs, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n) or b.shape != (n,):
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    cond = float(np.linalg.cond(a))
    if not np.isfinite(cond) or 1.0 / cond < rcond_min:
        raise SingularSystemError(f"system is singular to working precision (cond={cond:.3e})")

    for k in range(n - 1):
        piv = k + int(np.argmax(np.abs(a[k:, k])))
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
            b[[k, piv]] = b[[piv, k]]
        if a[k, k] == 0:
            raise SingularSystemError("zero pivot encountered")
        for i in range(k + 1, n):
            m = a[i, k] / a[k, k]
            if m != 0:
                a[i, k:] -= m * a[k, k:]
                b[i] -= m * b[k]
    x = np.zeros(n, dtype=complex)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - a[i, i + 1 :] @ x[i + 1 :]) / a[i, i]
    return x, cond
