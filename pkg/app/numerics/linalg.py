"""Small dense symmetric linear algebra on numpy arrays."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
import numpy.typing as npt

from app.core.config import settings
from app.core.errors import ConvergenceError, DomainError, NotPositiveDefiniteError

FloatArray = npt.NDArray[np.float64]

_SYMMETRY_RTOL = 1e-10
_PIVOT_RTOL = 1e-13
_JACOBI_RTOL = 1e-12


def as_symmetric(matrix: npt.ArrayLike) -> FloatArray:
    """Validate a square, numerically symmetric matrix and return its exact symmetrization."""
    mat = np.array(matrix, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] == 0:
        raise DomainError(f"expected a non-empty square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise DomainError("matrix contains non-finite entries")
    scale = float(np.max(np.abs(mat))) or 1.0
    if float(np.max(np.abs(mat - mat.T))) > _SYMMETRY_RTOL * scale:
        raise DomainError("matrix is not symmetric")
    return 0.5 * (mat + mat.T)


def cholesky(matrix: npt.ArrayLike) -> FloatArray:
    """Lower-triangular L with L @ L.T == matrix."""
    mat = as_symmetric(matrix)
    try:
        lower = np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("matrix is not positive definite") from exc
    pivots = np.diag(lower) ** 2
    if np.any(pivots <= _PIVOT_RTOL * float(np.max(np.diag(mat)))):
        raise NotPositiveDefiniteError(
            "matrix is numerically singular (rank deficient design?)"
        )
    return lower


def solve_lower(lower: FloatArray, rhs: npt.ArrayLike) -> FloatArray:
    return np.linalg.solve(lower, np.asarray(rhs, dtype=np.float64))


def solve_spd(matrix: npt.ArrayLike, rhs: npt.ArrayLike) -> FloatArray:
    """Solve A x = b for symmetric positive definite A through its Cholesky factor."""
    lower = cholesky(matrix)
    return np.linalg.solve(lower.T, solve_lower(lower, rhs))


def least_squares(design: npt.ArrayLike, response: npt.ArrayLike) -> tuple[FloatArray, float]:
    """Ordinary least squares by normal equations.

    Columns are scaled to unit norm before the Gram matrix is formed and one
    step of iterative refinement is applied. Returns (beta, rss).
    """
    x = np.asarray(design, dtype=np.float64)
    y = np.asarray(response, dtype=np.float64)
    if x.ndim != 2:
        raise DomainError(f"design must be two-dimensional, got shape {x.shape}")
    n_rows, n_cols = x.shape
    if y.shape != (n_rows,):
        raise DomainError(f"response length {y.shape} does not match {n_rows} design rows")
    if n_rows < n_cols:
        raise DomainError(f"least squares needs at least as many rows as columns ({n_rows} < {n_cols})")

    norms = np.linalg.norm(x, axis=0)
    if np.any(norms == 0.0):
        raise NotPositiveDefiniteError("design has an all-zero column")
    scaled = x / norms
    lower = cholesky(scaled.T @ scaled)

    def _solve(rhs: FloatArray) -> FloatArray:
        return np.linalg.solve(lower.T, solve_lower(lower, rhs))

    coef = _solve(scaled.T @ y)
    coef = coef + _solve(scaled.T @ (y - scaled @ coef))
    beta = coef / norms
    resid = y - x @ beta
    return beta, float(resid @ resid)


def sym_eigenvalues(matrix: npt.ArrayLike, max_sweeps: Optional[int] = None) -> FloatArray:
    """Eigenvalues of a symmetric matrix by cyclic-by-row Jacobi, sorted nonincreasing."""
    a = as_symmetric(matrix)
    n = a.shape[0]
    sweeps = max_sweeps or settings.JACOBI_MAX_SWEEPS
    scale = float(np.linalg.norm(a))
    if n == 1 or scale == 0.0:
        return np.sort(np.diag(a))[::-1].copy()

    off_mask = ~np.eye(n, dtype=bool)
    for _ in range(sweeps + 1):
        off = math.sqrt(float(np.sum(a[off_mask] ** 2)))
        if off <= _JACOBI_RTOL * scale:
            return np.sort(np.diag(a))[::-1].copy()
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
    raise ConvergenceError(f"Jacobi iteration did not converge in {sweeps} sweeps", terms=sweeps)


def pencil_eigenvalues(sigma: npt.ArrayLike, omega: npt.ArrayLike) -> FloatArray:
    """Roots of |Sigma - pi * Omega| = 0, i.e. the spectrum of Omega^{-1/2} Sigma Omega^{-1/2}."""
    sig = as_symmetric(sigma)
    lower = cholesky(omega)
    if sig.shape != lower.shape:
        raise DomainError(f"Sigma {sig.shape} and Omega {lower.shape} must have the same order")
    half = solve_lower(lower, sig)
    congruent = solve_lower(lower, half.T)
    return sym_eigenvalues(0.5 * (congruent + congruent.T))
