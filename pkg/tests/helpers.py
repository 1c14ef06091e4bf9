"""Independent dense oracles and small graph builders for tests.

Everything here rebuilds operators from the raw edge list with plain dense
numpy, sharing no code path with the package's sparse kernels.
"""

from __future__ import annotations

import numpy as np

from gfcn.graph_core import SparseGraph, build_graph


def random_graph(n: int, p: float, seed: int) -> SparseGraph:
    """Erdos-Renyi-style random graph (may contain isolated nodes)."""
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, k=1)
    mask = rng.random(iu[0].shape[0]) < p
    edges = np.stack([iu[0][mask], iu[1][mask]], axis=1)
    return build_graph(edges, n)


def random_graph_with_edges(n: int, m: int, seed: int) -> SparseGraph:
    """Random graph with roughly m distinct undirected edges."""
    rng = np.random.default_rng(seed)
    u = rng.integers(0, n, size=2 * m)
    v = rng.integers(0, n, size=2 * m)
    keep = u != v
    return build_graph(np.stack([u[keep], v[keep]], axis=1)[:m], n)


def path_graph(n: int) -> SparseGraph:
    return build_graph([(i, i + 1) for i in range(n - 1)], n)


def dense_adjacency(g: SparseGraph) -> np.ndarray:
    a = np.zeros((g.num_nodes, g.num_nodes))
    for u, v in g.edges():
        a[u, v] = a[v, u] = 1.0
    return a


def dense_adjacency_norm(g: SparseGraph) -> np.ndarray:
    a = dense_adjacency(g)
    d = a.sum(axis=1)
    inv = np.zeros_like(d)
    inv[d > 0] = 1.0 / np.sqrt(d[d > 0])
    return inv[:, None] * a * inv[None, :]


def dense_laplacian_norm(g: SparseGraph) -> np.ndarray:
    return np.eye(g.num_nodes) - dense_adjacency_norm(g)


def dense_gcn_renorm(g: SparseGraph) -> np.ndarray:
    a = dense_adjacency(g) + np.eye(g.num_nodes)
    d = a.sum(axis=1)
    inv = 1.0 / np.sqrt(d)
    return inv[:, None] * a * inv[None, :]


def spectral_fair_oracle(g: SparseGraph, x: np.ndarray, s: float) -> np.ndarray:
    """Dense eigendecomposition route: H = U diag(1/(1+s*lam)) U^T X."""
    lam, u = np.linalg.eigh(dense_laplacian_norm(g))
    return u @ np.diag(1.0 / (1.0 + s * lam)) @ u.T @ x
