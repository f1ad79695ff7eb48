"""Elementary sparse/dense kernels used throughout the pipeline."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .validation import check_csr, check_dense


def sparsity(A) -> float:
    """Fraction of zero entries, ``1 - nnz / (n_rows * n_cols)``."""
    A = check_csr(A)
    m, n = A.shape
    if m == 0 or n == 0:
        raise ValueError(f"sparsity undefined for zero-dimension matrix {m}x{n}")
    return 1.0 - A.nnz / (m * n)


def multiply(A, B) -> np.ndarray:
    """Sparse-dense product ``A @ B``; cost proportional to nnz(A) * B.n_cols."""
    A = check_csr(A)
    B = check_dense(B)
    if A.shape[1] != B.shape[0]:
        raise ValueError(
            f"dimension mismatch: A is {A.shape[0]}x{A.shape[1]}, B is {B.shape[0]}x{B.shape[1]}"
        )
    return np.asarray(A @ B)


def multiply_transposed(A, B) -> np.ndarray:
    """Transposed sparse-dense product ``A.T @ B``."""
    A = check_csr(A)
    B = check_dense(B)
    if A.shape[0] != B.shape[0]:
        raise ValueError(
            f"dimension mismatch: A.T is {A.shape[1]}x{A.shape[0]}, B is {B.shape[0]}x{B.shape[1]}"
        )
    return np.asarray(A.T @ B)


def frobenius_norm(A) -> float:
    """Square root of the sum of squared entries; accepts sparse or dense."""
    if sp.issparse(A):
        return float(np.linalg.norm(A.data)) if A.nnz else 0.0
    return float(np.linalg.norm(np.asarray(A, dtype=np.float64)))
