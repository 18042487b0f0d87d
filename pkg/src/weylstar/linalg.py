"""Small dense linear-algebra helpers on complex 2m x 2m matrices."""

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import ChartError

COND_LIMIT = 1e12


def standard_j(m: int) -> np.ndarray:
    """Return the skew matrix [[0, -I], [I, 0]] of size 2m."""
    eye = np.eye(m)
    zero = np.zeros((m, m))
    return np.block([[zero, -eye], [eye, zero]]).astype(complex)


def as_matrix(x) -> np.ndarray:
    a = np.array(x, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 2:
        raise ValueError(f"expected an even square matrix, got shape {a.shape}")
    return a


def half_dim(a: np.ndarray) -> int:
    return a.shape[0] // 2


def guarded_solve(a: np.ndarray, b: np.ndarray, message: str) -> np.ndarray:
    """Solve ``a x = b`` by LU with partial pivoting.

    Raises ``ChartError(message)`` when ``a`` is singular or its condition
    number exceeds ``COND_LIMIT``.
    """
    if not np.all(np.isfinite(a)):
        raise ChartError(message)
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise ChartError(f"{message} (condition number {cond:.3g})")
    return lu_solve(lu_factor(a), b)


def guarded_inv(a: np.ndarray, message: str) -> np.ndarray:
    return guarded_solve(a, np.eye(a.shape[0], dtype=complex), message)


def is_symplectic(s: np.ndarray, tol: float = 1e-10) -> bool:
    j = standard_j(half_dim(s))
    return bool(np.max(np.abs(s.T @ j @ s - j)) <= tol * max(1.0, np.max(np.abs(s)) ** 2))


def in_sp(alpha: np.ndarray, tol: float = 1e-12) -> bool:
    j = standard_j(half_dim(alpha))
    scale = max(1.0, float(np.max(np.abs(alpha))))
    return bool(np.max(np.abs(alpha @ j + j @ alpha.T)) <= tol * scale)


def symmetrize(q: np.ndarray) -> np.ndarray:
    return 0.5 * (q + q.T)
