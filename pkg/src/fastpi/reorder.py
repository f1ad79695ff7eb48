"""Hub-removal reordering of a sparse matrix and the 2x2 partition it induces.

The matrix is viewed as a bipartite graph (rows = instance nodes, columns =
feature nodes, one edge per stored nonzero). Each iteration removes the
top-degree nodes of the current graph to its hub region, peels every small
component off to the spoke region (each becoming one diagonal block), and
recurses on the giant connected component until it drops below the hub quota.
The result is a row/column permutation under which the matrix splits into a
rectangular block-diagonal top-left part and three hub-bordered parts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .validation import StructuralViolationError, check_csr


@dataclass(frozen=True)
class Permutation:
    """A bijection on {0, ..., len-1} stored both ways.

    ``forward[old] = new`` and ``backward[new] = old``.
    """

    forward: np.ndarray
    backward: np.ndarray

    def __post_init__(self):
        fwd = np.asarray(self.forward, dtype=np.int64)
        bwd = np.asarray(self.backward, dtype=np.int64)
        object.__setattr__(self, "forward", fwd)
        object.__setattr__(self, "backward", bwd)
        if fwd.shape != bwd.shape:
            raise ValueError("forward and backward arrays differ in length")
        size = len(fwd)
        if size and (fwd.min() < 0 or fwd.max() >= size or bwd.min() < 0 or bwd.max() >= size):
            raise ValueError("permutation entries out of range")
        if not np.array_equal(bwd[fwd], np.arange(size)):
            raise ValueError("forward and backward are not mutually inverse")

    @classmethod
    def from_forward(cls, forward) -> "Permutation":
        fwd = np.asarray(forward, dtype=np.int64)
        bwd = np.empty_like(fwd)
        bwd[fwd] = np.arange(len(fwd))
        return cls(fwd, bwd)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        idx = np.arange(n, dtype=np.int64)
        return cls(idx, idx.copy())

    def __len__(self) -> int:
        return len(self.forward)


@dataclass(frozen=True)
class BipartiteGraph:
    """Bipartite adjacency of a sparse matrix in CSR-of-lists form.

    ``instance_ptr/instance_adj`` list the feature neighbours of every
    instance node; ``feature_ptr/feature_adj`` the reverse direction.
    """

    n_instances: int
    n_features: int
    instance_ptr: np.ndarray
    instance_adj: np.ndarray
    feature_ptr: np.ndarray
    feature_adj: np.ndarray

    @property
    def n_edges(self) -> int:
        return len(self.instance_adj)

    def instance_neighbors(self, i: int) -> np.ndarray:
        return self.instance_adj[self.instance_ptr[i] : self.instance_ptr[i + 1]]

    def feature_neighbors(self, j: int) -> np.ndarray:
        return self.feature_adj[self.feature_ptr[j] : self.feature_ptr[j + 1]]


class BlockSpan(NamedTuple):
    """Row/column ranges of one diagonal block of the spoke region."""

    row_start: int
    row_len: int
    col_start: int
    col_len: int


@dataclass(frozen=True)
class ReorderResult:
    """Permutations plus the block metadata defining the 2x2 partition."""

    row_perm: Permutation
    col_perm: Permutation
    n_spoke_rows: int
    n_spoke_cols: int
    n_hub_rows: int
    n_hub_cols: int
    blocks: tuple
    n_iterations: int
    # Giant-component node count after each iteration (diagnostic, not serialized).
    gcc_sizes: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if self.n_spoke_rows + self.n_hub_rows != len(self.row_perm):
            raise ValueError("spoke and hub row counts do not sum to the row count")
        if self.n_spoke_cols + self.n_hub_cols != len(self.col_perm):
            raise ValueError("spoke and hub column counts do not sum to the column count")


def to_bipartite(A) -> BipartiteGraph:
    """Build the bipartite graph with one edge per stored nonzero of ``A``."""
    A = check_csr(A)
    At = A.T.tocsr()
    return BipartiteGraph(
        n_instances=A.shape[0],
        n_features=A.shape[1],
        instance_ptr=A.indptr.astype(np.int64),
        instance_adj=A.indices.astype(np.int64),
        feature_ptr=At.indptr.astype(np.int64),
        feature_adj=At.indices.astype(np.int64),
    )


def degree_histograms(graph: BipartiteGraph):
    """Exact degree histograms ``{degree: count}`` per side."""
    inst = np.diff(graph.instance_ptr)
    feat = np.diff(graph.feature_ptr)

    def _hist(deg):
        values, counts = np.unique(deg, return_counts=True)
        return {int(d): int(c) for d, c in zip(values, counts)}

    return _hist(inst), _hist(feat)


def _top_degree_nodes(degrees, active, quota: int) -> np.ndarray:
    """Top-``quota`` active positive-degree nodes, ordered by (degree desc, id asc)."""
    candidates = np.flatnonzero(active & (degrees > 0))
    if quota <= 0 or len(candidates) == 0:
        return candidates[:0]
    order = np.lexsort((candidates, -degrees[candidates]))
    return candidates[order[: min(quota, len(candidates))]]


def reorder(graph: BipartiteGraph, k: float) -> ReorderResult:
    """Iterative hub removal producing permutations, region sizes and block spans.

    Per iteration: select ceil(k * |rows|) and ceil(k * |cols|) top-degree
    nodes of the current graph as hubs (highest unassigned ids), find the
    connected components of the residual, peel every non-giant component off
    to the spoke region as one block (descending size, ties by smallest
    contained node id), then continue on the giant component. The loop stops
    once the giant component falls below the current hub quota on either
    side; the remaining giant component joins the hub region.
    """
    if not 0.0 < k < 1.0:
        raise ValueError(f"hub selection ratio k must be in (0, 1), got {k}")
    m, n = graph.n_instances, graph.n_features
    if m == 0 or n == 0:
        raise ValueError("graph has an empty node side")

    pattern = sp.csr_matrix(
        (np.ones(graph.n_edges), graph.instance_adj, graph.instance_ptr), shape=(m, n)
    )
    pattern_t = sp.csr_matrix(
        (np.ones(graph.n_edges), graph.feature_adj, graph.feature_ptr), shape=(n, m)
    )
    edge_rows = np.repeat(np.arange(m, dtype=np.int64), np.diff(graph.instance_ptr))
    edge_cols = graph.instance_adj

    row_new = np.full(m, -1, dtype=np.int64)
    col_new = np.full(n, -1, dtype=np.int64)
    lo_t = lo_f = 0
    hi_t, hi_f = m - 1, n - 1
    active_t = np.ones(m, dtype=bool)
    active_f = np.ones(n, dtype=bool)
    blocks: list[BlockSpan] = []
    gcc_sizes: list[int] = []
    iterations = 0

    while True:
        iterations += 1
        cnt_t = int(active_t.sum())
        cnt_f = int(active_f.sum())
        m_hub = math.ceil(k * cnt_t)
        n_hub = math.ceil(k * cnt_f)

        deg_t = pattern @ active_f.astype(np.float64)
        deg_f = pattern_t @ active_t.astype(np.float64)
        hubs_t = _top_degree_nodes(deg_t, active_t, m_hub)
        hubs_f = _top_degree_nodes(deg_f, active_f, n_hub)

        # Higher degree -> higher id; hubs stack downward from the top.
        row_new[hubs_t] = hi_t - np.arange(len(hubs_t))
        hi_t -= len(hubs_t)
        col_new[hubs_f] = hi_f - np.arange(len(hubs_f))
        hi_f -= len(hubs_f)
        active_t[hubs_t] = False
        active_f[hubs_f] = False

        # Connected components of the residual over the m+n node universe.
        keep = active_t[edge_rows] & active_f[edge_cols]
        adj = sp.csr_matrix(
            (np.ones(int(keep.sum())), (edge_rows[keep], edge_cols[keep] + m)),
            shape=(m + n, m + n),
        )
        _, labels = connected_components(adj, directed=False)
        act_nodes = np.concatenate(
            [np.flatnonzero(active_t), np.flatnonzero(active_f) + m]
        )
        if len(act_nodes) == 0:
            gcc_sizes.append(0)
            break

        act_labels = labels[act_nodes]
        sizes = np.bincount(act_labels)
        min_node = np.full(len(sizes), m + n, dtype=np.int64)
        np.minimum.at(min_node, act_labels, act_nodes)
        present = np.flatnonzero(sizes)
        # Giant component: max size, ties broken by smallest contained node id.
        gcc_label = present[np.lexsort((min_node[present], -sizes[present]))[0]]

        order = np.argsort(act_labels, kind="stable")
        grouped = act_nodes[order]
        boundaries = np.searchsorted(act_labels[order], present)
        groups = {
            lab: grouped[lo:hi]
            for lab, lo, hi in zip(
                present, boundaries, np.append(boundaries[1:], len(grouped))
            )
        }

        spoke_labels = [lab for lab in present if lab != gcc_label]
        spoke_labels.sort(key=lambda lab: (-sizes[lab], min_node[lab]))
        for lab in spoke_labels:
            members = groups[lab]  # ascending node ids
            split = np.searchsorted(members, m)
            comp_rows = members[:split]
            comp_cols = members[split:] - m
            blocks.append(BlockSpan(lo_t, len(comp_rows), lo_f, len(comp_cols)))
            row_new[comp_rows] = lo_t + np.arange(len(comp_rows))
            col_new[comp_cols] = lo_f + np.arange(len(comp_cols))
            lo_t += len(comp_rows)
            lo_f += len(comp_cols)

        gcc_members = groups[gcc_label]
        split = np.searchsorted(gcc_members, m)
        active_t = np.zeros(m, dtype=bool)
        active_f = np.zeros(n, dtype=bool)
        active_t[gcc_members[:split]] = True
        active_f[gcc_members[split:] - m] = True
        gcc_t = int(split)
        gcc_f = len(gcc_members) - gcc_t
        gcc_sizes.append(len(gcc_members))
        if gcc_t < m_hub or gcc_f < n_hub:
            break

    # The terminal giant component joins the hub region (the middle ids).
    rem_t = np.flatnonzero(active_t)
    rem_f = np.flatnonzero(active_f)
    row_new[rem_t] = lo_t + np.arange(len(rem_t))
    col_new[rem_f] = lo_f + np.arange(len(rem_f))

    return ReorderResult(
        row_perm=Permutation.from_forward(row_new),
        col_perm=Permutation.from_forward(col_new),
        n_spoke_rows=lo_t,
        n_spoke_cols=lo_f,
        n_hub_rows=m - lo_t,
        n_hub_cols=n - lo_f,
        blocks=tuple(blocks),
        n_iterations=iterations,
        gcc_sizes=tuple(gcc_sizes),
    )


def apply_permutation(A, row_perm: Permutation, col_perm: Permutation) -> sp.csr_matrix:
    """Remap entry (i, j) to (row_perm.forward[i], col_perm.forward[j])."""
    A = check_csr(A)
    if len(row_perm) != A.shape[0]:
        raise ValueError(
            f"row permutation has length {len(row_perm)}, matrix has {A.shape[0]} rows"
        )
    if len(col_perm) != A.shape[1]:
        raise ValueError(
            f"column permutation has length {len(col_perm)}, matrix has {A.shape[1]} columns"
        )
    coo = A.tocoo()
    out = sp.csr_matrix(
        (coo.data, (row_perm.forward[coo.row], col_perm.forward[coo.col])),
        shape=A.shape,
    )
    out.sort_indices()
    return out


def partition(A_reordered, result: ReorderResult):
    """Split the reordered matrix into (A11 block list, A12, A21, A22).

    A11 is returned per-block and never materialized whole. Raises
    StructuralViolationError if any nonzero of the spoke region falls
    outside every declared block span.
    """
    A = check_csr(A_reordered)
    m1, n1 = result.n_spoke_rows, result.n_spoke_cols
    if A.shape != (m1 + result.n_hub_rows, n1 + result.n_hub_cols):
        raise ValueError(
            f"matrix shape {A.shape} does not match reorder result "
            f"({m1 + result.n_hub_rows}, {n1 + result.n_hub_cols})"
        )
    spoke = A[:m1, :n1].tocsr()
    blocks = [
        spoke[b.row_start : b.row_start + b.row_len, b.col_start : b.col_start + b.col_len].tocsr()
        for b in result.blocks
    ]
    inside = sum(b.nnz for b in blocks)
    if inside != spoke.nnz:
        raise StructuralViolationError(
            f"{spoke.nnz - inside} spoke-region nonzeros lie outside every block span"
        )
    A12 = A[:m1, n1:].tocsr()
    A21 = A[m1:, :n1].tocsr()
    A22 = A[m1:, n1:].tocsr()
    return blocks, A12, A21, A22


def save_reorder_result(result: ReorderResult, path):
    """Text serialization: sizes header, permutation arrays, one line per block."""
    lines = [
        f"{result.n_spoke_rows} {result.n_spoke_cols} {result.n_hub_rows} "
        f"{result.n_hub_cols} {result.n_iterations} {len(result.blocks)}",
        " ".join(str(int(v)) for v in result.row_perm.forward),
        " ".join(str(int(v)) for v in result.col_perm.forward),
    ]
    for b in result.blocks:
        lines.append(f"{b.row_start} {b.row_len} {b.col_start} {b.col_len}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_reorder_result(path) -> ReorderResult:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    m1, n1, m2, n2, iterations, n_blocks = (int(v) for v in lines[0].split())
    row_perm = Permutation.from_forward([int(v) for v in lines[1].split()])
    col_perm = Permutation.from_forward([int(v) for v in lines[2].split()])
    blocks = tuple(
        BlockSpan(*(int(v) for v in line.split())) for line in lines[3 : 3 + n_blocks]
    )
    return ReorderResult(
        row_perm=row_perm,
        col_perm=col_perm,
        n_spoke_rows=m1,
        n_spoke_cols=n1,
        n_hub_rows=m2,
        n_hub_cols=n2,
        blocks=blocks,
        n_iterations=iterations,
    )


def write_degree_histogram_csv(graph: BipartiteGraph, path):
    """CSV export with columns ``degree,count,side``."""
    inst, feat = degree_histograms(graph)
    lines = ["degree,count,side"]
    for degree in sorted(inst):
        lines.append(f"{degree},{inst[degree]},instance")
    for degree in sorted(feat):
        lines.append(f"{degree},{feat[degree]},feature")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
