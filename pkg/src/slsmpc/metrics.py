"""Clustering quality against ground truth: pairwise/BCubed F, NMI, ARI.

Everything is computed from the contingency table, so all metrics are
invariant to relabeling either argument.
"""

from __future__ import annotations

import json
import warnings
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def _as_labels(x) -> np.ndarray:
    return np.asarray(getattr(x, "labels", x)).ravel()


def contingency(pred, truth) -> np.ndarray:
    """Dense ``clusters x classes`` count matrix."""
    p, t = _as_labels(pred), _as_labels(truth)
    if p.size != t.size:
        raise ValueError(f"length mismatch: {p.size} predicted vs {t.size} true labels")
    _, pi = np.unique(p, return_inverse=True)
    _, ti = np.unique(t, return_inverse=True)
    table = sp.coo_matrix((np.ones(p.size), (pi, ti)), shape=(pi.max() + 1 if p.size else 0, ti.max() + 1 if t.size else 0))
    return table.toarray()


def _pairs(x):
    return x * (x - 1) / 2.0


def _f(precision, recall):
    return 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)


def pairwise_prf(pred, truth) -> tuple[float, float, float]:
    """Precision, recall and F over all unordered sample pairs."""
    c = contingency(pred, truth)
    tp = _pairs(c).sum()
    pred_pos = _pairs(c.sum(axis=1)).sum()
    true_pos = _pairs(c.sum(axis=0)).sum()
    if pred_pos == 0 or true_pos == 0:
        warnings.warn("pairwise F-measure: empty denominator, reporting 0", RuntimeWarning, stacklevel=2)
    precision = tp / pred_pos if pred_pos else 0.0
    recall = tp / true_pos if true_pos else 0.0
    return float(precision), float(recall), float(_f(precision, recall))


def bcubed_prf(pred, truth) -> tuple[float, float, float]:
    """Item-averaged BCubed precision, recall and their harmonic mean."""
    c = contingency(pred, truth)
    n = c.sum()
    # each item in cell (k, l) has |cluster & class| = c[k, l]
    precision = (c ** 2 / c.sum(axis=1, keepdims=True)).sum() / n
    recall = (c ** 2 / c.sum(axis=0, keepdims=True)).sum() / n
    return float(precision), float(recall), float(_f(precision, recall))


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def nmi(pred, truth, average: str = "sqrt") -> float:
    """Normalised mutual information (natural log).

    ``average`` picks the normaliser: ``sqrt`` (geometric mean of the
    entropies), ``arithmetic``, ``max`` or ``min``.
    """
    c = contingency(pred, truth)
    n = c.sum()
    # a one-to-one contingency table means the partitions are identical
    if c.shape[0] == c.shape[1] and np.count_nonzero(c) == c.shape[0]:
        return 1.0
    hp, ht = _entropy(c.sum(axis=1)), _entropy(c.sum(axis=0))
    if hp == 0.0 or ht == 0.0:
        return 0.0
    nz = c > 0
    outer = np.outer(c.sum(axis=1), c.sum(axis=0))
    mi = float(np.sum(c[nz] / n * np.log(c[nz] * n / outer[nz])))
    norm = {
        "sqrt": np.sqrt(hp * ht),
        "arithmetic": 0.5 * (hp + ht),
        "max": max(hp, ht),
        "min": min(hp, ht),
    }[average]
    return float(min(1.0, max(0.0, mi / norm)))


def ari(pred, truth) -> float:
    """Adjusted Rand index."""
    c = contingency(pred, truth)
    n = c.sum()
    index = _pairs(c).sum()
    a = _pairs(c.sum(axis=1)).sum()
    b = _pairs(c.sum(axis=0)).sum()
    total = _pairs(n)
    expected = a * b / total if total else 0.0
    max_index = 0.5 * (a + b)
    if max_index == expected:
        return 1.0
    return float((index - expected) / (max_index - expected))


def evaluate(pred, truth, nmi_average: str = "sqrt") -> dict:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        pp, pr, pf = pairwise_prf(pred, truth)
    bp, br, bf = bcubed_prf(pred, truth)
    return {
        "pairwise": {"p": pp, "r": pr, "f": pf},
        "bcubed": {"p": bp, "r": br, "f": bf},
        "nmi": nmi(pred, truth, nmi_average),
        "ari": ari(pred, truth),
    }


def save_report(report: dict, path) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True))
