"""Low-rank pseudoinverses of sparse matrices via hub-removal matrix
reordering and incremental SVD, with a randomized baseline, a dense oracle,
and a multi-label linear-regression evaluation harness."""

from .datasets import MultiLabelDataset, from_matrix, load_dataset, save_dataset
from .estimators import LowRankSVD, PseudoinverseRegressor, compute_pseudoinverse, factorize
from .pinv import (
    FastpiConfig,
    FastpiResult,
    Pseudoinverse,
    StageTime,
    column_update,
    fastpi,
    materialize,
    pinv_from_svd,
    row_update,
)
from .regression import (
    RegressionModel,
    SplitSpec,
    evaluate,
    fit,
    precision_at_k,
    predict,
    split,
)
from .reorder import (
    BipartiteGraph,
    BlockSpan,
    Permutation,
    ReorderResult,
    apply_permutation,
    degree_histograms,
    partition,
    reorder,
    to_bipartite,
)
from .sparse import frobenius_norm, multiply, multiply_transposed, sparsity
from .svd import SvdFactors, block_diagonal_svd, dense_svd, randomized_svd, reconstruction_error, truncate
from .synth import SynthSpec, make_regression_dataset, synth_generate
from .validation import CapacityError, ParseError, StructuralViolationError

__version__ = "0.1.0"

__all__ = [
    "BipartiteGraph",
    "BlockSpan",
    "CapacityError",
    "FastpiConfig",
    "FastpiResult",
    "LowRankSVD",
    "MultiLabelDataset",
    "ParseError",
    "Permutation",
    "Pseudoinverse",
    "PseudoinverseRegressor",
    "RegressionModel",
    "ReorderResult",
    "SplitSpec",
    "StageTime",
    "StructuralViolationError",
    "SvdFactors",
    "SynthSpec",
    "apply_permutation",
    "block_diagonal_svd",
    "column_update",
    "compute_pseudoinverse",
    "degree_histograms",
    "dense_svd",
    "evaluate",
    "factorize",
    "fastpi",
    "fit",
    "frobenius_norm",
    "from_matrix",
    "load_dataset",
    "make_regression_dataset",
    "materialize",
    "multiply",
    "multiply_transposed",
    "partition",
    "pinv_from_svd",
    "precision_at_k",
    "predict",
    "randomized_svd",
    "reconstruction_error",
    "reorder",
    "row_update",
    "save_dataset",
    "sparsity",
    "split",
    "synth_generate",
    "to_bipartite",
    "truncate",
]
