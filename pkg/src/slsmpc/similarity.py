"""Per-view similarity matrices and exact k-nearest-neighbor lists."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import DatasetError, MultiViewDataset


@dataclass(frozen=True)
class SimilarityMatrix:
    """Dense symmetric similarity of one view.

    ``entries[i, j]`` is meaningful only when both ``observed[i]`` and
    ``observed[j]`` hold; other entries are zero and flagged invalid.
    """

    view: int
    entries: np.ndarray
    observed: np.ndarray
    metric: str = "cosine"

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def valid(self) -> np.ndarray:
        return np.outer(self.observed, self.observed)

    def is_valid(self, i: int, j: int) -> bool:
        return bool(self.observed[i] and self.observed[j])

    def dump_triples(self, path) -> None:
        """Write the valid upper triangle as ``i,j,w`` CSV rows."""
        iu, ju = np.triu_indices(self.n, k=1)
        keep = self.observed[iu] & self.observed[ju]
        iu, ju = iu[keep], ju[keep]
        rows = np.column_stack([iu, ju, self.entries[iu, ju]])
        np.savetxt(Path(path), rows, delimiter=",", fmt=["%d", "%d", "%.17g"], header="i,j,w", comments="")


@dataclass(frozen=True)
class KnnLists:
    """Top-``k`` neighbors per observed sample, most similar first."""

    view: int
    k: int
    neighbors: list[np.ndarray]

    def edges(self) -> np.ndarray:
        """Directed ``(i, j)`` pairs, one row per neighbor entry."""
        rows = [np.column_stack([np.full(nb.size, i), nb]) for i, nb in enumerate(self.neighbors) if nb.size]
        if not rows:
            return np.empty((0, 2), dtype=np.int64)
        return np.vstack(rows).astype(np.int64)


def parse_metric(metric: str) -> tuple[str, float | None]:
    """Normalise ``"cosine"``, ``"l1"``, ``"lp(2.5)"`` style metric names."""
    name = metric.strip().lower()
    if name == "cosine":
        return "cosine", None
    m = re.fullmatch(r"l(?:p\(?)?([0-9.]+)\)?", name)
    if m:
        p = float(m.group(1))
        if p <= 0:
            raise ValueError(f"L_p needs p > 0, got {p}")
        return "lp", p
    raise ValueError(f"unknown similarity metric {metric!r}")


def compute_similarity(ds: MultiViewDataset, view: int, metric: str = "cosine") -> SimilarityMatrix:
    """Similarity of all sample pairs in one view.

    ``cosine`` is the plain normalised inner product.  For ``lp`` metrics
    the negated L_p distance is min-max rescaled to [0, 1] over the valid
    entries (self-pairs included), so self-similarity is 1.
    """
    if not 0 <= view < ds.n_views:
        raise IndexError(f"view {view} out of range for {ds.n_views} views")
    kind, p = parse_metric(metric)
    observed = ds.mask[view]
    idx = np.flatnonzero(observed)
    x = ds.views[view][:, idx].T
    n = ds.n_samples
    entries = np.zeros((n, n), dtype=np.float64)

    if kind == "cosine":
        norms = np.linalg.norm(x, axis=1)
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise DatasetError(
                f"zero-norm feature vector under cosine similarity in view {view}: samples {idx[zero][:10].tolist()}"
            )
        xn = x / norms[:, None]
        sub = np.clip(xn @ xn.T, -1.0, 1.0)
        sub = 0.5 * (sub + sub.T)
        np.fill_diagonal(sub, 1.0)
        label = "cosine"
    else:
        dist = _lp_distances(x, p)
        s = -dist
        lo, hi = s.min(), s.max()
        sub = (s - lo) / (hi - lo) if hi > lo else np.ones_like(s)
        label = f"lp({p:g})"
    entries[np.ix_(idx, idx)] = sub
    return SimilarityMatrix(view, entries, observed.copy(), label)


def _lp_distances(x: np.ndarray, p: float) -> np.ndarray:
    if p == 2.0:
        sq = np.einsum("ij,ij->i", x, x)
        d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * x @ x.T, 0.0)
        d = np.sqrt(d2)
        np.fill_diagonal(d, 0.0)
        return 0.5 * (d + d.T)
    n = x.shape[0]
    d = np.empty((n, n))
    # row blocks keep the broadcast temporary bounded
    block = max(1, int(2e7 // max(1, n * x.shape[1])))
    for start in range(0, n, block):
        diff = np.abs(x[start:start + block, None, :] - x[None, :, :])
        d[start:start + block] = np.sum(diff ** p, axis=2) ** (1.0 / p)
    return 0.5 * (d + d.T)


def build_knn(sim: SimilarityMatrix, k: int) -> KnnLists:
    """Exact top-``k`` neighbors among observed samples, self excluded.

    Ties go to the lower sample index.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    idx = np.flatnonzero(sim.observed)
    sub = sim.entries[np.ix_(idx, idx)].copy()
    np.fill_diagonal(sub, -np.inf)
    kk = min(k, idx.size - 1)
    neighbors = [np.empty(0, dtype=np.int64) for _ in range(sim.n)]
    if kk > 0:
        # stable sort on the negated row keeps equal similarities in index order
        order = np.argsort(-sub, axis=1, kind="stable")[:, :kk]
        for row, i in enumerate(idx):
            neighbors[i] = idx[order[row]]
    return KnnLists(sim.view, int(k), neighbors)


def knn_union(knns: list[KnnLists], n: int) -> list[np.ndarray]:
    """Per-sample union of neighbor sets across views, sorted by index."""
    out = []
    for i in range(n):
        parts = [kn.neighbors[i] for kn in knns if kn.neighbors[i].size]
        out.append(np.unique(np.concatenate(parts)) if parts else np.empty(0, dtype=np.int64))
    return out
