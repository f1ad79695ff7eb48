"""Scikit-learn style estimators wrapping the factorization and regression APIs.

Both classes follow the sklearn contract (get_params/set_params via
BaseEstimator, fit returning self, trailing-underscore fitted attributes) so
they drop into pipelines, grid search and friends.
"""

from __future__ import annotations

import math
import time

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import pinv as pinv_mod
from . import regression
from .datasets import MultiLabelDataset
from .pinv import EPS, FastpiConfig, StageTime, pinv_from_svd, truncate
from .svd import SvdFactors, dense_svd, randomized_svd
from .validation import check_csr

METHODS = ("fastpi", "randpi", "dense")


def factorize(X, method: str, config: FastpiConfig):
    """Rank-``ceil(alpha * n)`` factors of X in original coordinates, per method.

    Returns (factors, reordering-or-None, stage timings).
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}, expected one of {METHODS}")
    X = check_csr(X)
    m, n = X.shape
    rank = math.ceil(config.alpha * min(m, n))
    if method == "fastpi":
        if m < n:
            # Factorize the transpose (the driver's convention) and swap sides.
            f_t, reordering, timings = factorize(X.T.tocsr(), method, config)
            factors = SvdFactors(
                np.asarray(f_t.Vt).T, f_t.sigma.copy(), np.asarray(f_t.U).T, True
            )
            return factors, reordering, timings
        result = pinv_mod.fastpi(X, config)
        unfolded = pinv_mod._unfold(result.factors, result.reordering)
        return unfolded, result.reordering, result.timings
    start = time.perf_counter()
    if method == "randpi":
        factors = randomized_svd(X, rank, config.seed)
    else:
        factors = truncate(dense_svd(X), rank)
    timings = [StageTime("svd", time.perf_counter() - start, factors.rank)]
    return factors, None, timings


def compute_pseudoinverse(X, method: str, config: FastpiConfig):
    """Factored pseudoinverse of X by any method, with stage timings."""
    if method == "fastpi":
        result = pinv_mod.fastpi(check_csr(X), config)
        return result.pseudoinverse, result.factors, result.timings
    factors, _, timings = factorize(X, method, config)
    start = time.perf_counter()
    pv = pinv_from_svd(factors, config.pinv_cutoff_factor)
    timings = timings + [StageTime("pinv_assembly", time.perf_counter() - start, pv.retained_rank)]
    return pv, factors, timings


class LowRankSVD(BaseEstimator, TransformerMixin):
    """Low-rank SVD of a sparse matrix by reordering+incremental updates,
    the randomized baseline, or the dense oracle.

    Parameters
    ----------
    method : {"fastpi", "randpi", "dense"}
    alpha : float in (0, 1], target rank ratio (rank = ceil(alpha * n))
    k : float in (0, 1), hub selection ratio of the reordering pass
    seed : int, seed for every randomized step
    low_rank_threshold : float, rank ratio below which inner SVDs go randomized

    Attributes
    ----------
    components_ : ndarray of shape (rank, n), right singular vectors
    singular_values_ : ndarray of shape (rank,)
    factors_ : SvdFactors in the input coordinate system
    """

    def __init__(self, method="fastpi", alpha=1.0, k=0.01, seed=0, low_rank_threshold=0.3):
        self.method = method
        self.alpha = alpha
        self.k = k
        self.seed = seed
        self.low_rank_threshold = low_rank_threshold

    def _config(self) -> FastpiConfig:
        return FastpiConfig(
            alpha=self.alpha, k=self.k, seed=self.seed,
            low_rank_threshold=self.low_rank_threshold,
        )

    def fit(self, X, y=None):
        factors, reordering, timings = factorize(X, self.method, self._config())
        self.factors_ = factors
        self.reordering_ = reordering
        self.timings_ = timings
        self.components_ = np.asarray(factors.Vt)
        self.singular_values_ = factors.sigma.copy()
        return self

    def transform(self, X):
        if not hasattr(self, "components_"):
            raise NotFittedError("LowRankSVD must be fitted before calling transform")
        X = check_csr(X)
        return np.asarray(X @ self.components_.T)

    def inverse_transform(self, Xt):
        if not hasattr(self, "components_"):
            raise NotFittedError("LowRankSVD must be fitted before calling inverse_transform")
        return np.asarray(Xt) @ self.components_

    def pseudoinverse(self, cutoff_factor=EPS):
        if not hasattr(self, "factors_"):
            raise NotFittedError("LowRankSVD must be fitted before assembling a pseudoinverse")
        return pinv_from_svd(self.factors_, cutoff_factor)


class PseudoinverseRegressor(BaseEstimator):
    """Multi-label least squares through a low-rank factored pseudoinverse.

    fit(X, Y) solves min ||X Z - Y||_F via Z = pinv(X) Y; predict returns the
    raw score matrix and score() the mean top-1 precision.
    """

    def __init__(
        self,
        method="fastpi",
        alpha=1.0,
        k=0.01,
        seed=0,
        low_rank_threshold=0.3,
        cutoff_factor=EPS,
    ):
        self.method = method
        self.alpha = alpha
        self.k = k
        self.seed = seed
        self.low_rank_threshold = low_rank_threshold
        self.cutoff_factor = cutoff_factor

    def fit(self, X, Y):
        config = FastpiConfig(
            alpha=self.alpha, k=self.k, seed=self.seed,
            low_rank_threshold=self.low_rank_threshold,
            pinv_cutoff_factor=self.cutoff_factor,
        )
        X = check_csr(X)
        Y = check_csr(Y)
        start = time.perf_counter()
        pv, _, _ = compute_pseudoinverse(X, self.method, config)
        dataset = MultiLabelDataset(X, _as_binary(Y))
        model = regression.fit(dataset, pv, method=self.method, alpha=self.alpha)
        self.coef_ = model.coefficients
        self.pinv_ = pv
        self.train_seconds_ = time.perf_counter() - start
        return self

    def decision_function(self, X):
        if not hasattr(self, "coef_"):
            raise NotFittedError("PseudoinverseRegressor must be fitted before predicting")
        X = check_csr(X)
        if X.shape[1] != self.coef_.shape[0]:
            raise ValueError(
                f"X has {X.shape[1]} features, model was fitted with {self.coef_.shape[0]}"
            )
        return np.asarray(X @ self.coef_)

    def predict(self, X):
        return self.decision_function(X)

    def score(self, X, Y, k: int = 1):
        """Mean P@k over the rows of X against binary labels Y."""
        scores = self.decision_function(X)
        Y = _as_binary(check_csr(Y))
        model = regression.RegressionModel(self.coef_, self.method, self.alpha, 0.0)
        dataset = MultiLabelDataset(check_csr(X), Y)
        return regression.evaluate(model, dataset, [k])[k]


def _as_binary(Y):
    if Y.nnz and not np.all(Y.data == 1.0):
        raise ValueError("label matrix must be binary with values exactly 1.0")
    return Y
