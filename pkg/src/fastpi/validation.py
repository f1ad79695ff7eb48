"""Input validation helpers and error types shared across the package.

Matrices are canonically stored as scipy CSR with float64 values; dense
matrices are C-contiguous float64 ndarrays. Every public entry point funnels
its matrix arguments through these helpers so the invariants (sorted column
indices, no explicit zeros, 64-bit reals) hold everywhere downstream.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

# Largest dense matrix (in entries) any operation is willing to materialize.
DENSE_CAPACITY = 100_000_000

# Largest single diagonal block (in entries) the block SVD will densify.
# A block beyond this signals pathological reordering, not a big problem.
BLOCK_CAPACITY = 4_000_000


class ParseError(ValueError):
    """Malformed dataset file; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class CapacityError(RuntimeError):
    """A dense materialization would exceed the configured capacity."""


class StructuralViolationError(RuntimeError):
    """A reordering postcondition failed (nonzero outside every block span)."""


def check_csr(A, name: str = "A") -> sp.csr_matrix:
    """Return ``A`` as a canonical float64 CSR matrix.

    Accepts any scipy sparse matrix or a 2-D array-like. Duplicate
    coordinates are summed and explicit zeros dropped, so the result
    always satisfies the storage invariants.
    """
    if sp.issparse(A):
        out = A.tocsr().astype(np.float64)
    else:
        arr = np.asarray(A, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
        out = sp.csr_matrix(arr)
    out.sum_duplicates()
    out.eliminate_zeros()
    out.sort_indices()
    return out


def check_dense(B, name: str = "B") -> np.ndarray:
    """Return ``B`` as a C-contiguous float64 2-D ndarray."""
    if sp.issparse(B):
        if B.shape[0] * B.shape[1] > DENSE_CAPACITY:
            raise CapacityError(
                f"{name} is {B.shape[0]}x{B.shape[1]}; refusing to densify beyond "
                f"{DENSE_CAPACITY} entries"
            )
        return np.ascontiguousarray(B.toarray(), dtype=np.float64)
    arr = np.ascontiguousarray(B, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    return arr


def check_vector(v, length: int | None = None, name: str = "v") -> np.ndarray:
    """Return ``v`` as a 1-D float64 ndarray, optionally checking its length."""
    if sp.issparse(v):
        arr = np.asarray(v.todense(), dtype=np.float64).ravel()
    else:
        arr = np.asarray(v, dtype=np.float64).ravel()
    if length is not None and arr.shape[0] != length:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {length}")
    return arr


def check_dims(actual: int, expected: int, what: str):
    if actual != expected:
        raise ValueError(f"dimension mismatch: {what} is {actual}, expected {expected}")
