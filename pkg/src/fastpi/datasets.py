"""Multi-label dataset container and text-format I/O.

File format (extreme-classification convention): the first line is
``m n L`` (space-separated counts); each of the following m lines is

    l1,l2,...,lk f1:v1 f2:v2 ...

where the label field is a comma-separated list of 0-based label indices
(possibly empty before the first space) and each feature token is a 0-based
``index:value`` pair with strictly increasing indices. UTF-8, LF endings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .validation import ParseError, check_csr


@dataclass(frozen=True)
class MultiLabelDataset:
    """Paired sparse feature matrix (m x n) and sparse binary label matrix (m x L)."""

    features: sp.csr_matrix
    labels: sp.csr_matrix

    def __post_init__(self):
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"features have {self.features.shape[0]} rows but labels have "
                f"{self.labels.shape[0]}"
            )
        if self.labels.nnz and not np.all(self.labels.data == 1.0):
            raise ValueError("label matrix values must all be exactly 1.0")

    @property
    def n_instances(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_labels(self) -> int:
        return self.labels.shape[1]

    def take_rows(self, indices) -> "MultiLabelDataset":
        """Row-subset both matrices, preserving the given order."""
        idx = np.asarray(indices, dtype=np.int64)
        return MultiLabelDataset(
            features=self.features[idx].tocsr(),
            labels=self.labels[idx].tocsr(),
        )


def from_matrix(A) -> MultiLabelDataset:
    """Wrap a bare feature matrix as a dataset with zero labels."""
    A = check_csr(A)
    return MultiLabelDataset(A, sp.csr_matrix((A.shape[0], 0)))


def _parse_header(line: str):
    parts = line.split()
    if len(parts) != 3:
        raise ParseError(1, f"header must be 'm n L', got {line!r}")
    try:
        m, n, n_labels = (int(p) for p in parts)
    except ValueError:
        raise ParseError(1, f"header must contain three integers, got {line!r}") from None
    if m < 0 or n < 0 or n_labels < 0:
        raise ParseError(1, f"header counts must be non-negative, got {line!r}")
    return m, n, n_labels


def load_dataset(path) -> MultiLabelDataset:
    """Load a dataset file, rejecting duplicate coordinates and bad indices."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise ParseError(1, "empty file, expected 'm n L' header")
    m, n, n_labels = _parse_header(lines[0])
    if len(lines) - 1 != m:
        raise ParseError(
            len(lines), f"expected {m} instance lines after the header, found {len(lines) - 1}"
        )

    feat_indptr = np.zeros(m + 1, dtype=np.int64)
    feat_indices: list[int] = []
    feat_values: list[float] = []
    lab_indptr = np.zeros(m + 1, dtype=np.int64)
    lab_indices: list[int] = []

    for row, line in enumerate(lines[1:]):
        lineno = row + 2
        cut = line.find(" ")
        if cut < 0:
            label_field, feat_tokens = line, []
        else:
            label_field, rest = line[:cut], line[cut + 1 :]
            feat_tokens = rest.split()
        # A line with labels only and no trailing space has no colon in it.
        if ":" in label_field:
            feat_tokens = [label_field] + feat_tokens
            label_field = ""

        row_labels: list[int] = []
        if label_field:
            seen = set()
            for tok in label_field.split(","):
                try:
                    lab = int(tok)
                except ValueError:
                    raise ParseError(lineno, f"bad label index {tok!r}") from None
                if lab < 0 or lab >= n_labels:
                    raise ParseError(lineno, f"label index {lab} out of range [0, {n_labels})")
                if lab in seen:
                    raise ParseError(lineno, f"duplicate label index {lab}")
                seen.add(lab)
                row_labels.append(lab)
        row_labels.sort()
        lab_indices.extend(row_labels)
        lab_indptr[row + 1] = len(lab_indices)

        prev = -1
        for tok in feat_tokens:
            idx_s, _, val_s = tok.partition(":")
            if not val_s:
                raise ParseError(lineno, f"bad feature token {tok!r}, expected 'index:value'")
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise ParseError(lineno, f"bad feature token {tok!r}") from None
            if idx < 0 or idx >= n:
                raise ParseError(lineno, f"feature index {idx} out of range [0, {n})")
            if idx == prev:
                raise ParseError(lineno, f"duplicate feature index {idx}")
            if idx < prev:
                raise ParseError(lineno, f"feature indices must be strictly increasing, got {idx} after {prev}")
            if not math.isfinite(val):
                raise ParseError(lineno, f"non-finite feature value {val_s!r}")
            if val == 0.0:
                raise ParseError(lineno, f"explicit zero value for feature {idx}")
            prev = idx
            feat_indices.append(idx)
            feat_values.append(val)
        feat_indptr[row + 1] = len(feat_indices)

    features = sp.csr_matrix(
        (np.asarray(feat_values, dtype=np.float64),
         np.asarray(feat_indices, dtype=np.int64),
         feat_indptr),
        shape=(m, n),
    )
    labels = sp.csr_matrix(
        (np.ones(len(lab_indices), dtype=np.float64),
         np.asarray(lab_indices, dtype=np.int64),
         lab_indptr),
        shape=(m, n_labels),
    )
    return MultiLabelDataset(features, labels)


def save_dataset(dataset: MultiLabelDataset, path):
    """Write a dataset in the text format; values round-trip exactly via repr."""
    feats = dataset.features
    labs = dataset.labels
    out = [f"{dataset.n_instances} {dataset.n_features} {dataset.n_labels}"]
    for i in range(dataset.n_instances):
        row_labels = np.sort(labs.indices[labs.indptr[i] : labs.indptr[i + 1]])
        lo, hi = feats.indptr[i], feats.indptr[i + 1]
        tokens = [
            f"{j}:{v!r}" for j, v in zip(feats.indices[lo:hi], feats.data[lo:hi])
        ]
        label_field = ",".join(str(l) for l in row_labels)
        if tokens:
            out.append(f"{label_field} {' '.join(tokens)}")
        else:
            out.append(label_field)
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
