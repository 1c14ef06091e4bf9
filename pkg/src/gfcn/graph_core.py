"""Sparse undirected graphs and the normalized operators built from them.

Graphs are stored in compressed sparse row (CSR) form with explicit
``row_offsets`` / ``col_indices`` / ``values`` arrays. Everything is float64.
Structures are frozen after construction and safe to share across threads;
multiplication never mutates its operands.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class EdgeError(ValueError):
    """An edge references a node outside [0, num_nodes)."""

    def __init__(self, edge: tuple[int, int], num_nodes: int):
        self.edge = (int(edge[0]), int(edge[1]))
        self.num_nodes = int(num_nodes)
        super().__init__(
            f"edge {self.edge} out of range for a graph with {num_nodes} nodes"
        )


def _as_csr_arrays(num_nodes, row_offsets, col_indices, values):
    row_offsets = np.ascontiguousarray(row_offsets, dtype=np.int64)
    col_indices = np.ascontiguousarray(col_indices, dtype=np.int64)
    values = np.ascontiguousarray(values, dtype=np.float64)
    if row_offsets.shape != (num_nodes + 1,):
        raise ValueError("row_offsets must have length num_nodes + 1")
    if row_offsets[0] != 0 or row_offsets[-1] != col_indices.shape[0]:
        raise ValueError("row_offsets must start at 0 and end at nnz")
    if np.any(np.diff(row_offsets) < 0):
        raise ValueError("row_offsets must be nondecreasing")
    if col_indices.shape != values.shape:
        raise ValueError("col_indices and values must have equal length")
    return row_offsets, col_indices, values


@dataclass(frozen=True)
class SparseGraph:
    """Undirected graph in CSR form.

    Invariants: the adjacency is symmetric, carries no self-loops, column
    indices are strictly increasing within each row, and all values are
    finite and positive (1.0 for the binary graphs used throughout).
    """

    num_nodes: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    @property
    def nnz(self) -> int:
        return int(self.col_indices.shape[0])

    @property
    def num_edges(self) -> int:
        """Undirected edge count (stored entries / 2)."""
        return self.nnz // 2

    def to_scipy(self) -> sp.csr_matrix:
        n = self.num_nodes
        return sp.csr_matrix(
            (self.values, self.col_indices, self.row_offsets), shape=(n, n), copy=False
        )

    def edges(self) -> np.ndarray:
        """Unordered edge pairs as an (E, 2) array with u < v, sorted."""
        rows = np.repeat(np.arange(self.num_nodes), np.diff(self.row_offsets))
        upper = rows < self.col_indices
        return np.stack([rows[upper], self.col_indices[upper]], axis=1)


class OperatorKind(enum.Enum):
    ADJACENCY_NORM = "adjacency_norm"
    LAPLACIAN_NORM = "laplacian_norm"
    GCN_RENORM = "gcn_renorm"


@dataclass(frozen=True)
class NormalizedOperator:
    """A normalized N x N graph operator in CSR form.

    Unlike ``SparseGraph`` this may carry diagonal entries (the normalized
    Laplacian and the renormalized operator both do).
    """

    kind: OperatorKind
    num_nodes: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    @property
    def nnz(self) -> int:
        return int(self.col_indices.shape[0])

    def to_scipy(self) -> sp.csr_matrix:
        n = self.num_nodes
        return sp.csr_matrix(
            (self.values, self.col_indices, self.row_offsets), shape=(n, n), copy=False
        )


def build_graph(edges, num_nodes: int) -> SparseGraph:
    """Assemble a binary undirected graph from an edge list.

    Input edges may appear in either orientation and may repeat; duplicates
    collapse to a single unordered edge of weight 1.0 and self-loops are
    dropped. Idempotent: rebuilding from ``g.edges()`` reproduces ``g``
    exactly.
    """
    if num_nodes < 0:
        raise ValueError("num_nodes must be nonnegative")
    e = np.asarray(list(edges), dtype=np.int64)
    if e.size == 0:
        e = e.reshape(0, 2)
    if e.ndim != 2 or e.shape[1] != 2:
        raise ValueError("edges must be pairs (u, v)")
    oob = (e < 0) | (e >= num_nodes)
    if oob.any():
        bad = int(np.flatnonzero(oob.any(axis=1))[0])
        raise EdgeError((e[bad, 0], e[bad, 1]), num_nodes)
    e = e[e[:, 0] != e[:, 1]]
    both = np.concatenate([e, e[:, ::-1]], axis=0)
    if both.shape[0]:
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        keep = np.ones(both.shape[0], dtype=bool)
        keep[1:] = np.any(both[1:] != both[:-1], axis=1)
        both = both[keep]
    rows, cols = both[:, 0], both[:, 1]
    row_offsets = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=num_nodes), out=row_offsets[1:])
    return SparseGraph(num_nodes, row_offsets, cols.copy(), np.ones(cols.shape[0]))


def degrees(g: SparseGraph) -> np.ndarray:
    """Weighted degree of every node (row sums). Zero for isolated nodes."""
    rows = np.repeat(np.arange(g.num_nodes), np.diff(g.row_offsets))
    return np.bincount(rows, weights=g.values, minlength=g.num_nodes)


def normalize(g: SparseGraph, kind: OperatorKind) -> NormalizedOperator:
    """Build a degree-normalized operator from ``g``.

    adjacency_norm : S = D^{-1/2} A D^{-1/2}
    laplacian_norm : L = I - S, eigenvalues in [0, 2]
    gcn_renorm     : D'^{-1/2} (A + I) D'^{-1/2} with D' the degrees of A + I

    Isolated nodes use the convention d^{-1/2} = 0, so their adjacency_norm
    row is empty while their laplacian_norm row is the bare diagonal 1.
    """
    kind = OperatorKind(kind)
    a = g.to_scipy()
    if kind is OperatorKind.GCN_RENORM:
        a = (a + sp.identity(g.num_nodes, format="csr")).tocsr()
        d = np.asarray(a.sum(axis=1)).ravel()
    else:
        d = degrees(g)
    with np.errstate(divide="ignore"):
        d_inv_sqrt = 1.0 / np.sqrt(d)
    d_inv_sqrt[np.isinf(d_inv_sqrt)] = 0.0
    dhalf = sp.diags(d_inv_sqrt)
    m = (dhalf @ a @ dhalf).tocsr()
    if kind is OperatorKind.LAPLACIAN_NORM:
        m = (sp.identity(g.num_nodes, format="csr") - m).tocsr()
    m.sort_indices()
    return NormalizedOperator(
        kind,
        g.num_nodes,
        np.asarray(m.indptr, dtype=np.int64),
        np.asarray(m.indices, dtype=np.int64),
        np.asarray(m.data, dtype=np.float64),
    )


def spmm(op: NormalizedOperator, h: np.ndarray) -> np.ndarray:
    """Sparse-dense product ``op @ h`` for an (N, F) dense block.

    Accumulation within each row runs in ascending column order, so repeated
    calls on identical inputs are bitwise reproducible.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] != op.num_nodes:
        raise ValueError(
            f"operator is {op.num_nodes}x{op.num_nodes}, dense block is {h.shape}"
        )
    return op.to_scipy() @ h
