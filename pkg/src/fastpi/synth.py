"""Synthetic corpora: skewed sparse matrices and planted-rank label sets."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .datasets import MultiLabelDataset
from .svd import dense_svd


@dataclass(frozen=True)
class SynthSpec:
    """Shape, density and degree-skew of a generated sparse matrix."""

    m: int
    n: int
    target_density: float
    skew_exponent: float
    seed: int

    def __post_init__(self):
        if self.m <= 0 or self.n <= 0:
            raise ValueError("matrix dimensions must be positive")
        if not 0.0 < self.target_density < 1.0:
            raise ValueError(f"target density must be in (0, 1), got {self.target_density}")
        if self.skew_exponent <= 1.0:
            raise ValueError(f"skew exponent must exceed 1, got {self.skew_exponent}")


def _power_law_weights(count: int, exponent: float, rng) -> np.ndarray:
    # P(node weight rank i) ~ i^(-1/(exponent-1)) gives degree exponent ~exponent.
    weights = (np.arange(1, count + 1, dtype=np.float64)) ** (-1.0 / (exponent - 1.0))
    rng.shuffle(weights)
    return weights / weights.sum()


def synth_generate(spec: SynthSpec) -> sp.csr_matrix:
    """Configuration-model-style bipartite matrix with power-law degree skew.

    Samples row/column endpoints proportionally to power-law weights until the
    requested number of distinct coordinates is reached; values are uniform in
    [0.5, 1.5). Deterministic per seed.
    """
    rng = np.random.default_rng(spec.seed)
    target_nnz = int(round(spec.target_density * spec.m * spec.n))
    target_nnz = max(target_nnz, 1)
    row_w = _power_law_weights(spec.m, spec.skew_exponent, rng)
    col_w = _power_law_weights(spec.n, spec.skew_exponent, rng)

    codes = np.zeros(0, dtype=np.int64)
    for _ in range(200):
        missing = target_nnz - len(codes)
        if missing <= 0:
            break
        draw = max(missing * 2, 1024)
        rows = rng.choice(spec.m, size=draw, p=row_w)
        cols = rng.choice(spec.n, size=draw, p=col_w)
        codes = np.union1d(codes, rows.astype(np.int64) * spec.n + cols)
    if len(codes) < target_nnz:
        raise ValueError(
            f"could not place {target_nnz} distinct entries with exponent "
            f"{spec.skew_exponent}; density/exponent combination is infeasible"
        )
    # union1d sorts, so dropping the surplus keeps a deterministic subset.
    keep = rng.permutation(len(codes))[:target_nnz]
    codes = np.sort(codes[keep])
    rows, cols = np.divmod(codes, spec.n)
    values = rng.uniform(0.5, 1.5, size=target_nnz)
    A = sp.csr_matrix((values, (rows, cols)), shape=(spec.m, spec.n))
    achieved = A.nnz / (spec.m * spec.n)
    if abs(achieved / spec.target_density - 1.0) > 0.2:
        raise ValueError(
            f"achieved density {achieved:.4g} deviates more than 20% from "
            f"target {spec.target_density:.4g}"
        )
    return A


def make_regression_dataset(
    m: int,
    n: int,
    n_labels: int,
    rank_ratio: float,
    density: float = 0.05,
    exponent: float = 2.0,
    seed: int = 0,
    labels_per_row: int = 3,
    ensure_full_rank: bool = True,
) -> MultiLabelDataset:
    """Multi-label corpus whose label signal lives in a planted-rank subspace.

    Features are a skewed sparse matrix (optionally with a unit-diagonal
    sprinkle so the matrix has full column rank); labels mark the top-scoring
    entries of a linear model confined to the leading ceil(rank_ratio * n)
    right-singular directions, so ranks below the planted ratio underfit.
    """
    if not 0.0 < rank_ratio <= 1.0:
        raise ValueError(f"rank_ratio must be in (0, 1], got {rank_ratio}")
    rng = np.random.default_rng(seed)
    A = synth_generate(SynthSpec(m, n, density, exponent, seed))
    if ensure_full_rank:
        if m < n:
            raise ValueError("full-rank corpus needs m >= n")
        diag_vals = rng.uniform(0.5, 1.5, size=n)
        existing = np.asarray(A[np.arange(n), np.arange(n)]).ravel() != 0.0
        missing = np.flatnonzero(~existing)
        if len(missing):
            add = sp.csr_matrix(
                (diag_vals[missing], (missing, missing)), shape=(m, n)
            )
            A = (A + add).tocsr()

    q = max(1, math.ceil(rank_ratio * n))
    factors = dense_svd(A)
    V_top = np.asarray(factors.Vt[:q, :]).T
    weights = rng.standard_normal((q, n_labels))
    scores = (A @ V_top) @ weights
    top = np.argsort(-scores, axis=1, kind="stable")[:, :labels_per_row]
    rows = np.repeat(np.arange(m), labels_per_row)
    labels = sp.csr_matrix(
        (np.ones(m * labels_per_row), (rows, top.ravel())), shape=(m, n_labels)
    )
    return MultiLabelDataset(A, labels.tocsr())
