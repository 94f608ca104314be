"""
Dense numerical kernel: SVD, norms and elementwise products.

Matrices are plain float64 numpy arrays validated by `as_matrix`; every
other module builds on these few functions.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .config import POWER_MAX_ITERATIONS, POWER_SEED, POWER_TOLERANCE
from .errors import InputError, NumericalFailureError, ShapeError

logger = logging.getLogger(__name__)


def as_matrix(a) -> np.ndarray:
    """
    Validate and convert input to a finite 2-D float64 array.

    Args:
        a: Anything numpy can turn into a 2-D array

    Returns:
        A float64 ndarray with at least one row and one column

    Raises:
        InputError: If the input is not 2-D, is empty, or has NaN/Inf entries
    """
    try:
        matrix = np.asarray(a, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InputError(f"Cannot interpret input as a real matrix: {exc}") from exc

    if matrix.ndim != 2:
        raise InputError(f"Expected a 2-D matrix, got {matrix.ndim} dimension(s)")
    if matrix.shape[0] == 0 or matrix.shape[1] == 0:
        raise InputError(f"Matrix must be non-empty, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise InputError("Matrix contains NaN or infinite entries")
    return matrix


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SvdResult:
    """Reduced SVD A = U diag(singulars) V^T; V is stored as cols x k."""

    U: np.ndarray
    singulars: np.ndarray
    V: np.ndarray

    @property
    def k(self) -> int:
        return len(self.singulars)

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.singulars) @ self.V.T


def svd(a) -> SvdResult:
    """
    Full rank-min(rows, cols) reduced SVD; callers truncate.

    LAPACK's divide-and-conquer driver is tried first, then the QR-iteration
    driver, before giving up.

    Raises:
        NumericalFailureError: If neither driver converges
    """
    matrix = as_matrix(a)
    try:
        U, s, Vt = np.linalg.svd(matrix, full_matrices=False)
    except np.linalg.LinAlgError:
        logger.warning("gesdd did not converge on %dx%d matrix, retrying with gesvd", *matrix.shape)
        try:
            U, s, Vt = scipy.linalg.svd(matrix, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            rows, cols = matrix.shape
            raise NumericalFailureError(f"SVD did not converge for {rows}x{cols} matrix") from exc

    return SvdResult(U=_frozen(U), singulars=_frozen(s), V=_frozen(Vt.T))


def singular_values(a) -> np.ndarray:
    """Singular values only, non-increasing."""
    matrix = as_matrix(a)
    try:
        return np.linalg.svd(matrix, compute_uv=False)
    except np.linalg.LinAlgError:
        return svd(matrix).singulars.copy()


def spectral_norm(
    a,
    tolerance: float = POWER_TOLERANCE,
    max_iterations: int = POWER_MAX_ITERATIONS,
) -> float:
    """
    Largest singular value by power iteration on the smaller Gram matrix.

    Iteration stops once the eigen-residual ||B v - rho v|| falls below
    tolerance * rho. If the cap is reached the full SVD is used instead.

    Args:
        a: Input matrix
        tolerance: Relative residual tolerance
        max_iterations: Iteration cap before falling back to svd

    Returns:
        sigma_1(a)
    """
    matrix = as_matrix(a)
    if not np.any(matrix):
        return 0.0

    rows, cols = matrix.shape
    if rows >= cols:
        gram = lambda x: matrix.T @ (matrix @ x)  # noqa: E731
        size = cols
    else:
        gram = lambda x: matrix @ (matrix.T @ x)  # noqa: E731
        size = rows

    v = np.random.default_rng(POWER_SEED).standard_normal(size)
    v /= np.linalg.norm(v)
    for _ in range(max_iterations):
        w = gram(v)
        rho = float(v @ w)
        if rho <= 0.0:
            break
        if np.linalg.norm(w - rho * v) <= tolerance * rho:
            return float(np.sqrt(rho))
        v = w / np.linalg.norm(w)

    logger.debug("Power iteration stagnated on %dx%d matrix, using full SVD", rows, cols)
    return float(singular_values(matrix)[0])


def nuclear_norm(a) -> float:
    """Sum of singular values."""
    return float(np.sum(singular_values(a)))


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(as_matrix(a), "fro"))


def hadamard(a, b) -> np.ndarray:
    """
    Entrywise product C_ij = A_ij * B_ij.

    Raises:
        ShapeError: If the operands differ in shape
    """
    left = as_matrix(a)
    right = as_matrix(b)
    if left.shape != right.shape:
        raise ShapeError(f"Hadamard product needs equal shapes, got {left.shape} and {right.shape}")
    return left * right
