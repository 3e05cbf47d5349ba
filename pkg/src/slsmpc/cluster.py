"""Probabilistic clustering by seeded local label moves.

Every sample starts in its own cluster.  Sweeps visit the samples in a
shuffled order and move each one to the neighboring cluster with the
largest sum of intra-cluster log-odds ``log P / (1 - P)``; the loop ends
when a sweep makes no move.  Maximising that sum is the same as
minimising the negative log-likelihood of the partition (up to a
constant), which is what :func:`objective` reports.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np

from .fusion import ProbGraph
from .probfn import EPS
from .refine import top_k_neighbors

ORACLE_MAX_N = 12


@dataclass
class Partition:
    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if np.any(self.labels < 0):
            raise ValueError("labels must be nonnegative")

    @property
    def n_clusters(self) -> int:
        return int(np.unique(self.labels).size)

    @property
    def clusters(self) -> dict[int, np.ndarray]:
        return {int(c): np.flatnonzero(self.labels == c) for c in np.unique(self.labels)}

    def canonical(self) -> "Partition":
        return Partition(canonical_labels(self.labels))

    def save(self, path) -> None:
        rows = np.column_stack([np.arange(self.labels.size), self.labels])
        np.savetxt(Path(path), rows, delimiter=",", fmt="%d", header="sample_index,label", comments="")

    @classmethod
    def load(cls, path) -> "Partition":
        return cls(read_labels(path))


def read_labels(path) -> np.ndarray:
    """Labels from either a ``sample_index,label`` CSV or a bare label list."""
    path = Path(path)
    text = path.read_text().strip().splitlines()
    if text and text[0].startswith("sample_index"):
        data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
        labels = np.empty(data.shape[0], dtype=np.int64)
        labels[data[:, 0]] = data[:, 1]
        return labels
    data = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
    return data.ravel()


def canonical_labels(labels) -> np.ndarray:
    """Renumber clusters 0..C-1 in order of their smallest member."""
    labels = np.asarray(labels)
    _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first)] = np.arange(first.size)
    return rank[inv]


def edge_weights(probs: np.ndarray) -> np.ndarray:
    """Log-odds ``log P(e=1) - log P(e=0)`` with P clamped to [eps, 1 - eps]."""
    p = np.clip(np.asarray(probs, dtype=np.float64), EPS, 1.0 - EPS)
    return np.log(p) - np.log1p(-p)


def objective(g: ProbGraph, part: Partition) -> float:
    """Sum of ``log P(e=0) - log P(e=1)`` over stored intra-cluster edges (constant dropped)."""
    z = part.labels
    if z.size != g.n:
        raise ValueError(f"partition covers {z.size} samples, graph has {g.n}")
    intra = z[g.rows] == z[g.cols]
    return float(-np.sum(edge_weights(g.probs[intra])))


def cluster(
    g: ProbGraph,
    k: int = 20,
    maxiter: int = 20,
    seed: int = 0,
    singleton_escape: bool = True,
    history: Optional[list] = None,
) -> Partition:
    """Greedy label moves from singletons.

    Candidates for sample ``i`` are the labels of its top-``k`` neighbors
    by probability, its own label and, if ``singleton_escape``, a fresh
    empty cluster.  Ties keep the current label, otherwise go to the
    lowest label.  ``history`` (if given) collects the objective after
    every sweep.
    """
    n = g.n
    if n == 0:
        raise ValueError("empty probability graph")
    csr_rows = np.concatenate([g.rows, g.cols])
    csr_cols = np.concatenate([g.cols, g.rows])
    w = edge_weights(g.probs)
    csr_w = np.concatenate([w, w])
    order = np.lexsort((csr_cols, csr_rows))
    csr_rows, csr_cols, csr_w = csr_rows[order], csr_cols[order], csr_w[order]
    indptr = np.searchsorted(csr_rows, np.arange(n + 1))
    nbrs = top_k_neighbors(g, k)

    rng = np.random.default_rng(seed)
    z = np.arange(n, dtype=np.int64)
    sizes = np.ones(n, dtype=np.int64)
    free: list[int] = []
    listn = np.arange(n)
    for _ in range(maxiter):
        rng.shuffle(listn)
        moves = 0
        for i in listn:
            lo, hi = indptr[i], indptr[i + 1]
            js, ws = csr_cols[lo:hi], csr_w[lo:hi]
            cur = z[i]
            gain = {}
            for lab, wt in zip(z[js].tolist(), ws.tolist()):
                gain[lab] = gain.get(lab, 0.0) + wt
            best_lab, best_gain = cur, gain.get(cur, 0.0)
            candidates = set(z[nbrs[i]].tolist())
            candidates.discard(cur)
            for lab in sorted(candidates):
                gl = gain.get(lab, 0.0)
                if gl > best_gain:
                    best_lab, best_gain = lab, gl
            if singleton_escape and sizes[cur] > 1 and best_gain < 0.0:
                # n labels for n samples: a shared cluster implies an empty label
                best_lab = free.pop()
                best_gain = 0.0
            if best_lab != cur:
                sizes[cur] -= 1
                if sizes[cur] == 0:
                    free.append(cur)
                sizes[best_lab] += 1
                z[i] = best_lab
                moves += 1
        if history is not None:
            history.append(objective(g, Partition(z)))
        if moves == 0:
            break
    return Partition(canonical_labels(z))


# ---------------------------------------------------------------------------
# exhaustive oracle
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _set_partitions(n: int) -> np.ndarray:
    """All restricted growth strings of length ``n``, lexicographic order."""
    out = []
    a = [0] * n

    def rec(i, m):
        if i == n:
            out.append(a.copy())
            return
        for v in range(m + 2):
            a[i] = v
            rec(i + 1, max(m, v))

    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    a[0] = 0
    rec(1, 0)
    return np.asarray(out, dtype=np.int64)


def oracle_cluster(g: ProbGraph, tol: float = 1e-12) -> Partition:
    """Exact objective minimiser by enumerating every set partition.

    Among optimal partitions the one with the most clusters wins, then
    the lexicographically smallest canonical labeling.
    """
    if g.n > ORACLE_MAX_N:
        raise ValueError(f"oracle enumeration is limited to N <= {ORACLE_MAX_N}, got {g.n}")
    parts = _set_partitions(g.n)
    same = parts[:, g.rows] == parts[:, g.cols]
    obj = -(same.astype(np.float64) @ edge_weights(g.probs))
    best = obj.min()
    tied = np.flatnonzero(obj <= best + tol)
    n_clusters = parts[tied].max(axis=1) + 1
    tied = tied[n_clusters == n_clusters.max()]
    return Partition(parts[tied[0]].copy())
