"""Multi-label linear regression on a factored pseudoinverse, with P@k scoring."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .datasets import MultiLabelDataset
from .pinv import Pseudoinverse
from .validation import check_vector


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


@dataclass(frozen=True)
class RegressionModel:
    """Least-squares coefficients (n x L) plus run metadata."""

    coefficients: np.ndarray
    method: str
    alpha: float
    train_seconds: float


def split(dataset: MultiLabelDataset, spec: SplitSpec):
    """Deterministic disjoint row split into ceil(f*m) train and the rest test."""
    m = dataset.n_instances
    if m < 2:
        raise ValueError(f"need at least 2 instances to split, got {m}")
    rng = np.random.default_rng(spec.seed)
    order = rng.permutation(m)
    n_train = math.ceil(spec.train_fraction * m)
    train_idx = np.sort(order[:n_train])
    test_idx = np.sort(order[n_train:])
    return dataset.take_rows(train_idx), dataset.take_rows(test_idx)


def fit(
    train: MultiLabelDataset,
    pinv: Pseudoinverse,
    method: str = "fastpi",
    alpha: float = 1.0,
) -> RegressionModel:
    """Closed-form coefficients ``pinv @ Y`` computed right-to-left in factored form."""
    n, m = pinv.shape
    if m != train.n_instances or n != train.n_features:
        raise ValueError(
            f"pseudoinverse is for a {m}x{n} matrix but the training set is "
            f"{train.n_instances}x{train.n_features}"
        )
    start = time.perf_counter()
    Z = pinv.apply(train.labels)
    return RegressionModel(
        coefficients=np.asarray(Z),
        method=method,
        alpha=alpha,
        train_seconds=time.perf_counter() - start,
    )


def predict(model: RegressionModel, features) -> np.ndarray:
    """Score vector ``Z' @ a`` for one feature vector of length n."""
    a = check_vector(features, length=model.coefficients.shape[0], name="feature vector")
    return model.coefficients.T @ a


def predict_matrix(model: RegressionModel, features) -> np.ndarray:
    """Score matrix ``X @ Z`` for a batch of feature rows."""
    if features.shape[1] != model.coefficients.shape[0]:
        raise ValueError(
            f"feature matrix has {features.shape[1]} columns, model expects "
            f"{model.coefficients.shape[0]}"
        )
    return np.asarray(features @ model.coefficients)


def precision_at_k(scores, labels, k: int) -> float:
    """Fraction of the k top-scored labels that are positive; ties break by index."""
    scores = check_vector(scores, name="scores")
    labels = check_vector(labels, length=len(scores), name="labels")
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if k > len(scores):
        raise ValueError(f"k={k} exceeds the number of labels {len(scores)}")
    top = np.argsort(-scores, kind="stable")[:k]
    return float(labels[top].sum() / k)


def evaluate(model: RegressionModel, test: MultiLabelDataset, ks) -> dict:
    """Mean P@k over all test rows (rows without positives contribute 0)."""
    ks = [int(k) for k in ks]
    if not ks:
        return {}
    if max(ks) > test.n_labels:
        raise ValueError(f"k={max(ks)} exceeds the number of labels {test.n_labels}")
    if min(ks) < 1:
        raise ValueError("every k must be at least 1")
    totals = {k: 0.0 for k in ks}
    m = test.n_instances
    if m == 0:
        return {k: 0.0 for k in ks}
    kmax = max(ks)
    chunk = max(1, 1 << 22 >> max(1, test.n_labels).bit_length())
    for lo in range(0, m, chunk):
        hi = min(m, lo + chunk)
        scores = predict_matrix(model, test.features[lo:hi])
        top = np.argsort(-scores, axis=1, kind="stable")[:, :kmax]
        dense_labels = np.asarray(test.labels[lo:hi].todense())
        hits = np.take_along_axis(dense_labels, top, axis=1)
        for k in ks:
            totals[k] += float(hits[:, :k].sum()) / k
    return {k: totals[k] / m for k in ks}
