"""Fusing per-view probabilities into one symmetric pairwise probability graph."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .probfn import EPS, PiecewiseProbFn

AGGREGATIONS = ("formula", "mean", "max", "min", "multiply")


@dataclass
class ProbGraph:
    """Sparse symmetric store of P(same class) over a fixed pair support.

    Edges are kept once, as ``rows < cols``, sorted lexicographically.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    probs: np.ndarray
    provenance: str = "fused"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        r = np.asarray(self.rows, dtype=np.int64)
        c = np.asarray(self.cols, dtype=np.int64)
        p = np.asarray(self.probs, dtype=np.float64)
        if np.any(r == c):
            raise ValueError("probability graph cannot hold self-edges")
        lo, hi = np.minimum(r, c), np.maximum(r, c)
        order = np.lexsort((hi, lo))
        self.rows, self.cols, self.probs = lo[order], hi[order], p[order]
        if self.rows.size and np.any((np.diff(self.rows) == 0) & (np.diff(self.cols) == 0)):
            raise ValueError("duplicate edges in probability graph")
        if np.any(~np.isfinite(self.probs)) or np.any(self.probs < 0) or np.any(self.probs > 1):
            raise ValueError("edge probabilities must lie in [0, 1]")

    @property
    def n_edges(self) -> int:
        return self.rows.size

    def to_csr(self) -> sp.csr_matrix:
        """Symmetric CSR matrix of the stored probabilities (absent edges read 0)."""
        r = np.concatenate([self.rows, self.cols])
        c = np.concatenate([self.cols, self.rows])
        v = np.concatenate([self.probs, self.probs])
        m = sp.csr_matrix((v, (r, c)), shape=(self.n, self.n))
        m.sort_indices()
        return m

    def adjacency(self) -> list[np.ndarray]:
        """Neighbor index arrays from the stored edge support."""
        csr = self.to_csr()
        return [csr.indices[csr.indptr[i]:csr.indptr[i + 1]].copy() for i in range(self.n)]

    def get(self, i: int, j: int) -> Optional[float]:
        a, b = min(i, j), max(i, j)
        lo = np.searchsorted(self.rows, a, side="left")
        hi = np.searchsorted(self.rows, a, side="right")
        k = lo + np.searchsorted(self.cols[lo:hi], b)
        if k < hi and self.cols[k] == b:
            return float(self.probs[k])
        return None

    def with_probs(self, probs: np.ndarray, provenance: str) -> "ProbGraph":
        return ProbGraph(self.n, self.rows.copy(), self.cols.copy(), np.clip(probs, 0.0, 1.0), provenance, dict(self.meta))

    def save(self, path) -> None:
        header = f"# n={self.n} provenance={self.provenance} aggregation={self.meta.get('aggregation', 'na')}"
        rows = np.column_stack([self.rows, self.cols, self.probs])
        with Path(path).open("w") as fh:
            fh.write(header + "\n")
            fh.write("i,j,p\n")
            np.savetxt(fh, rows, delimiter=",", fmt=["%d", "%d", "%.17g"])

    @classmethod
    def load(cls, path) -> "ProbGraph":
        path = Path(path)
        with path.open() as fh:
            first = fh.readline().strip()
        if not first.startswith("#"):
            raise ValueError(f"{path} is not a probability-graph CSV (missing header)")
        fields = dict(tok.split("=", 1) for tok in first.lstrip("# ").split())
        data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
        if data.size == 0:
            data = np.empty((0, 3))
        meta = {"aggregation": fields.get("aggregation", "na")}
        return cls(int(fields["n"]), data[:, 0].astype(np.int64), data[:, 1].astype(np.int64), data[:, 2], fields.get("provenance", "fused"), meta)


def aggregate(fvals: np.ndarray, present: np.ndarray, how: str = "formula") -> np.ndarray:
    """Reduce per-view probabilities row-wise over the present views.

    ``fvals`` and ``present`` are ``T x M``; every row needs at least one
    present view.
    """
    if how not in AGGREGATIONS:
        raise ValueError(f"unknown aggregation {how!r}")
    present = np.asarray(present, dtype=bool)
    if np.any(~present.any(axis=1)):
        raise ValueError("pair observed in zero views")
    f = np.where(present, np.asarray(fvals, dtype=np.float64), np.nan)
    if how == "formula":
        c = np.clip(f, EPS, 1.0 - EPS)
        logit = np.where(present, np.log(c) - np.log1p(-c), 0.0)
        # summing in sorted order makes the result exactly view-order independent
        out = expit(np.sort(logit, axis=1).sum(axis=1))
    elif how == "mean":
        out = np.nanmean(np.sort(f, axis=1), axis=1)
    elif how == "max":
        out = np.nanmax(f, axis=1)
    elif how == "min":
        out = np.nanmin(f, axis=1)
    else:
        out = np.prod(np.sort(np.where(present, f, 1.0), axis=1), axis=1)
    return np.clip(out, 0.0, 1.0)


def complete_view(fcross: Mapping[tuple[int, int], np.ndarray], anchor_segments: Mapping[int, int], target_view: int) -> Optional[float]:
    """Stand-in probability for an unobserved view from the observed anchors.

    Geometric mean over anchors ``a`` of ``Fcross^{a->target}`` at the
    pair's segment in view ``a``.  With fewer than two anchors nothing is
    completed and ``None`` is returned.
    """
    if len(anchor_segments) < 2:
        return None
    vals = [float(fcross[a, target_view][s]) for a, s in anchor_segments.items()]
    return float(np.prod(vals) ** (1.0 / len(vals)))


def fuse(
    pairs: np.ndarray,
    sims: np.ndarray,
    observed: np.ndarray,
    fns: Sequence[PiecewiseProbFn],
    aggregation: str = "formula",
    completion: bool = False,
    fcross: Optional[Mapping[tuple[int, int], np.ndarray]] = None,
    n: Optional[int] = None,
) -> ProbGraph:
    """Pairwise posterior probability of every pair from its observed views.

    ``sims`` and ``observed`` are ``T x M``.  With ``completion`` on, views
    missing for a pair that has at least two observed views are filled in
    from the cross-view tables before aggregation.
    """
    pairs = np.asarray(pairs, dtype=np.int64)
    observed = np.asarray(observed, dtype=bool)
    t, m_views = observed.shape
    if len(fns) != m_views:
        raise ValueError(f"{len(fns)} functions for {m_views} views")
    fvals = np.zeros((t, m_views))
    segs = np.full((t, m_views), -1, dtype=np.int64)
    for m, fn in enumerate(fns):
        rows = np.flatnonzero(observed[:, m])
        segs[rows, m] = fn.segment_of(sims[rows, m])
        fvals[rows, m] = fn.values[segs[rows, m]]
    present = observed.copy()
    if completion:
        if fcross is None:
            raise ValueError("view completion needs the cross-view tables")
        n_obs = observed.sum(axis=1)
        for t_idx in np.flatnonzero((n_obs >= 2) & (n_obs < m_views)):
            anchors = {int(a): int(segs[t_idx, a]) for a in np.flatnonzero(observed[t_idx])}
            for target in np.flatnonzero(~observed[t_idx]):
                value = complete_view(fcross, anchors, int(target))
                if value is not None:
                    fvals[t_idx, target] = value
                    present[t_idx, target] = True
    probs = aggregate(fvals, present, aggregation)
    n_nodes = int(n if n is not None else (pairs.max() + 1 if pairs.size else 0))
    return ProbGraph(n_nodes, pairs[:, 0], pairs[:, 1], probs, "fused", {"aggregation": aggregation, "completion": bool(completion)})
