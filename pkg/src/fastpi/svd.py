"""SVD engines: dense oracle, randomized baseline, truncation, block assembly.

Factors are kept as (U, sigma, Vt) with orthonormal columns/rows. The block
assembly returns U and Vt block-sparse (scipy CSR) so downstream consumers
can exploit the structure; every other engine returns dense factors.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .sparse import multiply, multiply_transposed
from .validation import BLOCK_CAPACITY, DENSE_CAPACITY, CapacityError, check_csr


@dataclass
class SvdFactors:
    """Factor triplet ``U @ diag(sigma) @ Vt`` of a p x q matrix, rank r.

    ``is_sorted`` marks sigma as non-increasing; block-assembled factors are
    unsorted and consumers requiring order must reject them rather than sort
    (sorting would destroy the block-sparse structure).
    """

    U: np.ndarray | sp.spmatrix
    sigma: np.ndarray
    Vt: np.ndarray | sp.spmatrix
    is_sorted: bool

    def __post_init__(self):
        self.sigma = np.asarray(self.sigma, dtype=np.float64).ravel()
        if self.U.shape[1] != len(self.sigma) or self.Vt.shape[0] != len(self.sigma):
            raise ValueError(
                f"inconsistent factor shapes: U {self.U.shape}, sigma ({len(self.sigma)},), "
                f"Vt {self.Vt.shape}"
            )
        if len(self.sigma) and self.sigma.min() < 0:
            raise ValueError("singular values must be non-negative")
        if self.is_sorted and len(self.sigma) > 1 and np.any(np.diff(self.sigma) > 0):
            raise ValueError("factors flagged sorted but sigma is not non-increasing")

    @property
    def rank(self) -> int:
        return len(self.sigma)

    @property
    def shape(self) -> tuple:
        return (self.U.shape[0], self.Vt.shape[1])

    def orthonormality_defect(self) -> float:
        """Max abs deviation of U'U and Vt Vt' from the identity."""
        if self.rank == 0:
            return 0.0
        gram_u = _to_dense(self.U.T @ self.U)
        gram_v = _to_dense(self.Vt @ self.Vt.T)
        eye = np.eye(self.rank)
        return float(max(np.abs(gram_u - eye).max(), np.abs(gram_v - eye).max()))

    def validate(self, tol: float = 1e-10):
        defect = self.orthonormality_defect()
        if defect > tol:
            raise ValueError(f"factor orthonormality defect {defect:.3e} exceeds {tol:.1e}")
        return self

    def dense_reconstruction(self) -> np.ndarray:
        """Materialize ``U @ diag(sigma) @ Vt`` (small factors only)."""
        p, q = self.shape
        if p * q > DENSE_CAPACITY:
            raise CapacityError(f"reconstruction would materialize {p}x{q} entries")
        U = _to_dense(self.U)
        Vt = _to_dense(self.Vt)
        return (U * self.sigma) @ Vt


def _to_dense(M) -> np.ndarray:
    if sp.issparse(M):
        return np.asarray(M.todense(), dtype=np.float64)
    return np.asarray(M, dtype=np.float64)


def dense_svd(A) -> SvdFactors:
    """Full-accuracy SVD of a dense (or densifiable) matrix; the exact oracle."""
    if sp.issparse(A):
        if A.shape[0] * A.shape[1] > DENSE_CAPACITY:
            raise CapacityError(
                f"dense SVD of a {A.shape[0]}x{A.shape[1]} matrix exceeds the "
                f"{DENSE_CAPACITY}-entry guard"
            )
        A = A.toarray()
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={A.ndim}")
    if A.shape[0] * A.shape[1] > DENSE_CAPACITY:
        raise CapacityError(
            f"dense SVD of a {A.shape[0]}x{A.shape[1]} matrix exceeds the "
            f"{DENSE_CAPACITY}-entry guard"
        )
    if A.size and not np.all(np.isfinite(A)):
        raise ValueError("matrix contains non-finite entries")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    return SvdFactors(U, s, Vt, is_sorted=True)


def truncate(factors: SvdFactors, rank: int) -> SvdFactors:
    """Keep the leading ``rank`` triplets of sorted factors."""
    if not factors.is_sorted:
        raise ValueError("truncate requires sorted factors")
    if not 1 <= rank <= factors.rank:
        raise ValueError(f"target rank {rank} out of range [1, {factors.rank}]")
    U = factors.U[:, :rank]
    Vt = factors.Vt[:rank, :]
    return SvdFactors(U, factors.sigma[:rank].copy(), Vt, is_sorted=True)


def randomized_svd(A, rank: int, seed: int) -> SvdFactors:
    """Randomized rank-``rank`` SVD with a Gaussian 2r oversampled sketch.

    Four steps: sketch B = A @ X with X Gaussian (n x 2r); orthonormal basis
    Q of B; small SVD of Y = Q' A truncated to r; lift U = Q @ U_small.
    Deterministic for a fixed seed; no power iterations.
    """
    A = check_csr(A)
    m, n = A.shape
    if not 1 <= rank <= min(m, n):
        raise ValueError(f"target rank {rank} out of range [1, {min(m, n)}]")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 2 * rank))
    B = multiply(A, X)
    Q, _ = np.linalg.qr(B)
    Y = multiply_transposed(A, Q).T
    U_small, s, Vt = np.linalg.svd(Y, full_matrices=False)
    U = Q @ U_small[:, :rank]
    return SvdFactors(U, s[:rank].copy(), Vt[:rank, :], is_sorted=True)


def block_diagonal_svd(blocks, alpha: float) -> SvdFactors:
    """Assemble the SVD of a rectangular block-diagonal matrix from its blocks.

    Block i of shape (h, w) contributes a rank ceil(alpha * min(h, w))
    truncated SVD; empty-span blocks contribute rank 0 but still advance the
    row/column offsets. U and Vt come back block-sparse, unsorted.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"target rank ratio alpha must be in (0, 1], got {alpha}")
    u_rows, u_cols, u_vals = [], [], []
    v_rows, v_cols, v_vals = [], [], []
    sigmas = []
    row_off = col_off = rank_off = 0
    for block in blocks:
        h, w = block.shape
        if h == 0 or w == 0:
            row_off += h
            col_off += w
            continue
        if h * w > BLOCK_CAPACITY:
            raise CapacityError(
                f"diagonal block of {h}x{w} entries exceeds the {BLOCK_CAPACITY}-entry "
                "guard; reordering produced a pathological block"
            )
        dense = block.toarray() if sp.issparse(block) else np.asarray(block, dtype=np.float64)
        U, s, Vt = np.linalg.svd(dense, full_matrices=False)
        keep = int(np.ceil(alpha * min(h, w)))
        U, s, Vt = U[:, :keep], s[:keep], Vt[:keep, :]
        u_rows.append(np.repeat(np.arange(h), keep) + row_off)
        u_cols.append(np.tile(np.arange(keep), h) + rank_off)
        u_vals.append(U.ravel())
        v_rows.append(np.repeat(np.arange(keep), w) + rank_off)
        v_cols.append(np.tile(np.arange(w), keep) + col_off)
        v_vals.append(Vt.ravel())
        sigmas.append(s)
        row_off += h
        col_off += w
        rank_off += keep

    total_rank = rank_off
    sigma = np.concatenate(sigmas) if sigmas else np.zeros(0)

    def _assemble(rows, cols, vals, shape):
        if rows:
            return sp.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=shape,
            )
        return sp.csr_matrix(shape)

    U = _assemble(u_rows, u_cols, u_vals, (row_off, total_rank))
    Vt = _assemble(v_rows, v_cols, v_vals, (total_rank, col_off))
    return SvdFactors(U, sigma, Vt, is_sorted=False)


def reconstruction_error(A, factors: SvdFactors, chunk: int = 1 << 20) -> float:
    """Frobenius norm of ``A - U diag(sigma) Vt`` without forming the product.

    Uses ||A - B||^2 = ||A||^2 - 2<A, B> + ||B||^2 with the cross term
    evaluated only at A's stored coordinates (chunked) and ||B||^2 through
    the r x r Gram matrices.
    """
    A = check_csr(A)
    U = _to_dense(factors.U)
    Vt = _to_dense(factors.Vt)
    s = factors.sigma
    norm_a_sq = float(np.dot(A.data, A.data))
    if factors.rank == 0:
        return float(np.sqrt(norm_a_sq))
    gram = (s[:, None] * s[None, :]) * (U.T @ U) * (Vt @ Vt.T)
    norm_b_sq = float(gram.sum())
    coo = A.tocoo()
    cross = 0.0
    step = max(1, chunk // max(1, factors.rank))
    Us = U * s
    for lo in range(0, A.nnz, step):
        hi = min(A.nnz, lo + step)
        rows = coo.row[lo:hi]
        cols = coo.col[lo:hi]
        vals = coo.data[lo:hi]
        cross += float(np.einsum("ij,ji->i", Us[rows], Vt[:, cols]) @ vals)
    diff_sq = max(norm_a_sq - 2.0 * cross + norm_b_sq, 0.0)
    return float(np.sqrt(diff_sq))


_HEADER = struct.Struct("<QQQB")


def save_factors(factors: SvdFactors, path):
    """Binary layout: ``p q r sorted`` header then U, sigma, Vt as float64."""
    p, q = factors.shape
    U = _to_dense(factors.U)
    Vt = _to_dense(factors.Vt)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(p, q, factors.rank, 1 if factors.is_sorted else 0))
        fh.write(np.ascontiguousarray(U, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(factors.sigma, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(Vt, dtype="<f8").tobytes())


def load_factors(path) -> SvdFactors:
    raw = Path(path).read_bytes()
    p, q, r, sorted_flag = _HEADER.unpack_from(raw, 0)
    off = _HEADER.size
    U = np.frombuffer(raw, dtype="<f8", count=p * r, offset=off).reshape(p, r)
    off += 8 * p * r
    sigma = np.frombuffer(raw, dtype="<f8", count=r, offset=off)
    off += 8 * r
    Vt = np.frombuffer(raw, dtype="<f8", count=r * q, offset=off).reshape(r, q)
    return SvdFactors(U.copy(), sigma.copy(), Vt.copy(), is_sorted=bool(sorted_flag))
