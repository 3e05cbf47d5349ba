"""Graph-context refinement of pairwise probabilities.

Both operators read a snapshot of the current probabilities and write a
new graph, so the result does not depend on edge visiting order.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .fusion import ProbGraph


class SparseGraphError(ValueError):
    """A sample has no neighbors to propagate from."""


def _lookup(csr: sp.csr_matrix, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Stored values of ``csr`` at ``(rows, cols)``; absent entries read 0."""
    n = csr.shape[1]
    coo_r = np.repeat(np.arange(csr.shape[0]), np.diff(csr.indptr))
    keys = coo_r.astype(np.int64) * n + csr.indices
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    data = csr.data[order]
    q = rows.astype(np.int64) * n + cols
    pos = np.searchsorted(keys, q)
    pos_c = np.minimum(pos, max(keys.size - 1, 0))
    hit = (pos < keys.size) & (keys[pos_c] == q) if keys.size else np.zeros(q.size, bool)
    return np.where(hit, data[pos_c] if keys.size else 0.0, 0.0)


def _neighbor_matrix(nbrs: Sequence[np.ndarray], n: int, weights: Optional[sp.csr_matrix] = None) -> sp.csr_matrix:
    """Directed ``n x n`` matrix with entry ``(i, h)`` for ``h`` in ``nbrs[i]``.

    Entries carry ``weights[i, h]`` when given, otherwise 1.
    """
    lens = np.array([len(x) for x in nbrs], dtype=np.int64)
    r = np.repeat(np.arange(n), lens)
    c = np.concatenate([np.asarray(x, dtype=np.int64) for x in nbrs]) if lens.sum() else np.empty(0, np.int64)
    keep = r != c
    r, c = r[keep], c[keep]
    if weights is None:
        v = np.ones(r.size)
    else:
        v = _lookup(weights, r, c)
    m = sp.csr_matrix((v, (r, c)), shape=(n, n))
    m.sum_duplicates()
    m.sort_indices()
    return m


def path_propagate(g: ProbGraph, knn_union: Optional[Sequence[np.ndarray]] = None) -> ProbGraph:
    """Raise each edge to its best two-hop path through a shared neighbor.

    ``P'(i, j) = max(P(i, j), max_h P(i, h) * P(h, j))`` for ``h`` in
    ``knn_i & knn_j``.  Neighbor sets default to the graph's own
    adjacency.
    """
    n = g.n
    if g.n_edges == 0:
        return g.with_probs(g.probs.copy(), "refined")
    nbrs = g.adjacency() if knn_union is None else knn_union
    prob = g.to_csr()
    a = _neighbor_matrix(nbrs, n, prob)
    member = _neighbor_matrix(nbrs, n)

    # expand every edge (i, j) over h in knn_j, keep h that is also in knn_i
    rows, cols = g.rows, g.cols
    deg = np.diff(member.indptr)[cols]
    e_idx = np.repeat(np.arange(rows.size), deg)
    starts = member.indptr[cols]
    offs = np.arange(e_idx.size) - np.repeat(np.cumsum(deg) - deg, deg)
    h = member.indices[np.repeat(starts, deg) + offs]
    i_rep = rows[e_idx]
    in_i = _lookup(member, i_rep, h) > 0
    e_idx, h, i_rep = e_idx[in_i], h[in_i], i_rep[in_i]
    via = _lookup(prob, i_rep, h) * _lookup(prob, cols[e_idx], h)
    best = np.zeros(rows.size)
    np.maximum.at(best, e_idx, via)
    out = np.maximum(g.probs, best)
    return g.with_probs(out, "refined")


def top_k_neighbors(g: ProbGraph, k: int) -> list[np.ndarray]:
    """Per-sample ``k`` highest-probability stored neighbors (ties to the lower index)."""
    csr = g.to_csr()
    out = []
    for i in range(g.n):
        idx = csr.indices[csr.indptr[i]:csr.indptr[i + 1]]
        val = csr.data[csr.indptr[i]:csr.indptr[i + 1]]
        order = np.lexsort((idx, -val))[:k]
        out.append(idx[order])
    return out


def co_neighbor_propagate(g: ProbGraph, k: int) -> ProbGraph:
    """Rescale each edge by the probability mass its endpoints' top-k lists share.

    ``P'(i, j) = sum_{h in knn_i & knn_j} (P(i, h) + P(j, h)) /
    (sum_{h in knn_i} P(i, h) + sum_{h in knn_j} P(j, h))``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = g.n
    nbrs = top_k_neighbors(g, k)
    touched = np.zeros(n, dtype=bool)
    touched[g.rows] = True
    touched[g.cols] = True
    empty = [i for i in np.flatnonzero(touched) if nbrs[i].size == 0]
    if empty:
        raise SparseGraphError(f"samples with empty neighbor lists: {empty[:10]}")
    prob = g.to_csr()
    kw = _neighbor_matrix(nbrs, n, prob)
    kb = kw.copy()
    kb.data[:] = 1.0
    shared = (kw @ kb.T + kb @ kw.T).tocsr()
    num = _lookup(shared, g.rows, g.cols)
    mass = np.asarray(kw.sum(axis=1)).ravel()
    den = mass[g.rows] + mass[g.cols]
    out = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return g.with_probs(np.clip(out, 0.0, 1.0), "refined")


def refine(
    g: ProbGraph,
    k: int,
    knn_union: Optional[Sequence[np.ndarray]] = None,
    path_passes: int = 1,
    coneighbor_passes: int = 1,
) -> ProbGraph:
    """Path propagation passes followed by co-neighbor passes."""
    out = g
    for _ in range(path_passes):
        out = path_propagate(out, knn_union)
    for _ in range(coneighbor_passes):
        out = co_neighbor_propagate(out, k)
    if out is g:
        return g.with_probs(g.probs.copy(), g.provenance)
    return out


def check_path_bound(b: float, c: float) -> tuple[float, bool]:
    """Probability that i, j share a class given P(i,h)=b, P(j,h)=c and a 0.5 prior on (i, j)."""
    if not (0.0 < b < 1.0 and 0.0 < c < 1.0):
        raise ValueError("b and c must lie strictly inside (0, 1)")
    q = (b * c + 0.5 * (1.0 - b - c)) / (0.5 * b * c + 1.0 - 0.5 * b - 0.5 * c)
    return q, bool(q >= b * c)
