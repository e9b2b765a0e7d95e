"""Dense / compressed-row matrix helpers and the exact kernels used everywhere.

Dense matrices are plain 2-D ``numpy`` arrays. Sparse matrices are
``scipy.sparse.csr_matrix`` kept in canonical form (sorted, strictly
increasing column indices per row, no explicit zeros).
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import DimensionError, RankDeficiencyError

__all__ = [
    "as_sparse_rows",
    "check_matrix",
    "check_vector",
    "gram",
    "inv_factor",
    "is_sparse",
    "matvec",
    "max_row_nnz",
    "nnz",
    "row_norms_sq",
    "spd_solve",
    "symmetrize",
    "transpose_matvec",
]


def is_sparse(A) -> bool:
    return sp.issparse(A)


def as_sparse_rows(A) -> sp.csr_matrix:
    """Return ``A`` as a canonical CSR matrix (duplicates summed, zeros dropped)."""
    S = sp.csr_matrix(A, dtype=np.float64, copy=True)
    S.sum_duplicates()
    S.eliminate_zeros()
    S.sort_indices()
    return S


def check_matrix(A, name: str = "A"):
    """Validate shape and finiteness. Returns ``A`` (float64 for dense input)."""
    if is_sparse(A):
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise DimensionError(f"{name} must be a non-empty 2-D matrix, got {A.shape}")
        if not np.all(np.isfinite(A.data)):
            raise ValueError(f"{name} has non-finite entries")
        return A
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def check_vector(v, length: int | None = None, name: str = "v") -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {v.shape}")
    if length is not None and v.shape[0] != length:
        raise DimensionError(f"{name} has length {v.shape[0]}, expected {length}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def gram(A) -> np.ndarray:
    """Return ``A^T A`` as a dense symmetric ``d x d`` array."""
    A = check_matrix(A)
    if is_sparse(A):
        G = (A.T @ A).toarray()
    else:
        G = A.T @ A
    return symmetrize(np.asarray(G, dtype=np.float64))


def _cholesky_lower(M: np.ndarray, what: str) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{what}: expected a square matrix, got shape {M.shape}")
    try:
        L = sla.cholesky(symmetrize(M), lower=True, check_finite=True)
    except sla.LinAlgError as exc:
        raise RankDeficiencyError(f"{what}: matrix is not positive definite ({exc})") from exc
    if np.any(np.diag(L) <= 0.0):
        raise RankDeficiencyError(f"{what}: non-positive Cholesky pivot")
    return L


def spd_solve(M: np.ndarray, y) -> np.ndarray:
    """Solve ``M z = y`` for symmetric positive definite ``M`` by Cholesky."""
    L = _cholesky_lower(M, "spd_solve")
    y = check_vector(y, L.shape[0], "y")
    w = sla.solve_triangular(L, y, lower=True)
    return sla.solve_triangular(L.T, w, lower=False)


def inv_factor(M: np.ndarray) -> np.ndarray:
    """Symmetric ``U = M^{-1/2}``, so ``U^T U = U U^T = M^{-1}``.

    Both products matter: ``U^T U = M^{-1}`` is the factor contract and
    ``U U^T = M^{-1}`` is what makes ``(A U)^T (A U) = I`` when ``M = A^T A``.
    A triangular factor can satisfy only one of them.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"inv_factor: expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("inv_factor: non-finite entries")
    lam, V = sla.eigh(symmetrize(M))
    if lam[0] <= 0.0 or lam[0] <= lam[-1] * 1e-14:
        raise RankDeficiencyError(
            f"inv_factor: matrix is not positive definite (eigenvalues {lam[0]:.3e}..{lam[-1]:.3e})")
    return symmetrize((V / np.sqrt(lam)) @ V.T)


def matvec(A, x) -> np.ndarray:
    A = check_matrix(A)
    x = check_vector(x, A.shape[1], "x")
    return np.asarray(A @ x, dtype=np.float64).ravel()


def transpose_matvec(A, v) -> np.ndarray:
    A = check_matrix(A)
    v = check_vector(v, A.shape[0], "v")
    return np.asarray(A.T @ v, dtype=np.float64).ravel()


def row_norms_sq(A) -> np.ndarray:
    if is_sparse(A):
        return np.asarray(A.multiply(A).sum(axis=1), dtype=np.float64).ravel()
    A = np.asarray(A, dtype=np.float64)
    return np.einsum("ij,ij->i", A, A)


def nnz(A) -> int:
    if is_sparse(A):
        return int(as_sparse_rows(A).nnz)
    return int(np.count_nonzero(A))


def max_row_nnz(A) -> int:
    if is_sparse(A):
        S = as_sparse_rows(A)
        return int(np.max(np.diff(S.indptr))) if S.shape[0] else 0
    return int(np.max(np.count_nonzero(A, axis=1)))
