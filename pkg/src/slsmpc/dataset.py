"""Multi-view datasets with per-sample view-observation masks.

Feature matrices are stored feature-major (``d x N``), one column per
sample.  Columns of samples that are unobserved in a view are kept as
zeros and must never be read; ``mask[m, i]`` tells whether they are valid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np


class DatasetError(ValueError):
    """Raised for malformed or inconsistent multi-view data."""


@dataclass(frozen=True)
class MultiViewDataset:
    views: list[np.ndarray]
    mask: np.ndarray
    labels: Optional[np.ndarray] = None
    name: str = field(default="dataset", compare=False)

    def __post_init__(self):
        if not self.views:
            raise DatasetError("dataset needs at least one view")
        views = [np.ascontiguousarray(np.asarray(v, dtype=np.float64)) for v in self.views]
        n = views[0].shape[1]
        for m, v in enumerate(views):
            if v.ndim != 2:
                raise DatasetError(f"view {m} is not a 2-d matrix")
            if v.shape[0] == 0:
                raise DatasetError(f"view {m} has zero feature dimension")
            if v.shape[1] != n:
                raise DatasetError(
                    f"shape mismatch: view 0 has {n} samples, view {m} has {v.shape[1]}"
                )
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != (len(views), n):
            raise DatasetError(f"mask shape {mask.shape} != {(len(views), n)}")
        unseen = np.flatnonzero(~mask.any(axis=0))
        if unseen.size:
            raise DatasetError(f"samples observed in zero views: {unseen[:10].tolist()}")
        for m, v in enumerate(views):
            if not np.all(np.isfinite(v[:, mask[m]])):
                raise DatasetError(f"non-finite entries in observed columns of view {m}")
            # unobserved columns are zeroed so stale values can never leak
            v[:, ~mask[m]] = 0.0
        labels = self.labels
        if labels is not None:
            labels = np.asarray(labels, dtype=np.int64)
            if labels.shape != (n,):
                raise DatasetError(f"labels have length {labels.size}, expected {n}")
        object.__setattr__(self, "views", views)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self) -> int:
        return self.views[0].shape[1]

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def dims(self) -> list[int]:
        return [v.shape[0] for v in self.views]

    def observed(self, view: int) -> np.ndarray:
        """Indices of the samples observed in ``view``."""
        return np.flatnonzero(self.mask[view])

    def with_mask(self, mask: np.ndarray) -> "MultiViewDataset":
        return MultiViewDataset(
            [v.copy() for v in self.views], mask, self.labels, name=self.name
        )

    def mask_stats(self) -> dict:
        m = self.mask
        stats = {
            "n_samples": int(self.n_samples),
            "n_views": int(self.n_views),
            "observed_per_view": [int(c) for c in m.sum(axis=1)],
            "fully_observed": int(m.all(axis=0).sum()),
        }
        if self.n_views == 2:
            stats["missing_view_1"] = int((~m[0]).sum())
            stats["missing_view_2"] = int((~m[1]).sum())
        stats["paired_fraction"] = stats["fully_observed"] / self.n_samples
        return stats

    def __eq__(self, other):
        if not isinstance(other, MultiViewDataset):
            return NotImplemented
        if self.n_views != other.n_views or self.n_samples != other.n_samples:
            return False
        if not np.array_equal(self.mask, other.mask):
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        if self.labels is not None and not np.array_equal(self.labels, other.labels):
            return False
        return all(
            a.shape == b.shape and np.allclose(a, b, rtol=0.0, atol=1e-12)
            for a, b in zip(self.views, other.views)
        )

    __hash__ = None


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------


def _read_csv_matrix(path: Path) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except (OSError, ValueError) as exc:
        raise DatasetError(f"cannot parse {path}: {exc}") from exc
    return data


def _read_csv_vector(path: Path, dtype) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", dtype=dtype, ndmin=2)
    except (OSError, ValueError) as exc:
        raise DatasetError(f"cannot parse {path}: {exc}") from exc
    return data.ravel() if 1 in data.shape else data


def load_dataset(path, format: str = "json-manifest") -> MultiViewDataset:
    """Load a dataset from a JSON manifest or from a list of per-view CSVs.

    ``format="json-manifest"`` expects a JSON file with keys ``views``
    (list of CSV paths, relative to the manifest), optional ``mask`` and
    optional ``labels``.  ``format="csv-per-view"`` accepts a sequence of
    CSV paths (or a directory whose ``*.csv`` files are the views, sorted
    by name) and marks every sample observed.
    """
    if format == "json-manifest":
        path = Path(path)
        try:
            manifest = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DatasetError(f"cannot read manifest {path}: {exc}") from exc
        if "views" not in manifest or not manifest["views"]:
            raise DatasetError("manifest has no 'views' entry")
        base = path.parent
        views = [_read_csv_matrix(base / p) for p in manifest["views"]]
        _check_counts(views)
        n = views[0].shape[1]
        if manifest.get("mask"):
            mask = _read_csv_matrix(base / manifest["mask"]).astype(bool)
        else:
            mask = np.ones((len(views), n), dtype=bool)
        labels = None
        if manifest.get("labels"):
            labels = _read_csv_vector(base / manifest["labels"], np.int64)
        return MultiViewDataset(views, mask, labels, name=manifest.get("name", path.stem))

    if format == "csv-per-view":
        if isinstance(path, (str, Path)) and Path(path).is_dir():
            paths = sorted(Path(path).glob("*.csv"))
        elif isinstance(path, (str, Path)):
            paths = [Path(path)]
        else:
            paths = [Path(p) for p in path]
        if not paths:
            raise DatasetError(f"no CSV files found at {path}")
        views = [_read_csv_matrix(p) for p in paths]
        _check_counts(views)
        mask = np.ones((len(views), views[0].shape[1]), dtype=bool)
        return MultiViewDataset(views, mask)

    raise DatasetError(f"unknown dataset format {format!r}")


def _check_counts(views: Sequence[np.ndarray]) -> None:
    counts = [v.shape[1] for v in views]
    if len(set(counts)) != 1:
        raise DatasetError(f"shape mismatch: per-view sample counts {counts}")


def save_dataset(ds: MultiViewDataset, directory) -> Path:
    """Write ``ds`` as per-view CSVs plus mask, labels and a manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {"name": ds.name, "views": []}
    for m, v in enumerate(ds.views):
        fname = f"view{m + 1}.csv"
        np.savetxt(directory / fname, v, delimiter=",", fmt="%.17g")
        manifest["views"].append(fname)
    np.savetxt(directory / "mask.csv", ds.mask.astype(np.int64), delimiter=",", fmt="%d")
    manifest["mask"] = "mask.csv"
    if ds.labels is not None:
        np.savetxt(directory / "labels.csv", ds.labels[None, :], delimiter=",", fmt="%d")
        manifest["labels"] = "labels.csv"
    out = directory / "manifest.json"
    out.write_text(json.dumps(manifest, indent=2))
    return out


# ---------------------------------------------------------------------------
# missing-view protocols
# ---------------------------------------------------------------------------


def apply_missing_protocol(ds: MultiViewDataset, paired_fraction: float, seed: int = 0) -> MultiViewDataset:
    """Keep ``ceil(c*N)`` samples with both views; split the rest in half.

    The first half of the unpaired samples loses view 1, the second half
    loses view 2; with an odd remainder the extra sample loses view 2.
    Which samples are paired is drawn at random from ``seed``.
    """
    c = float(paired_fraction)
    if not (0.0 < c <= 1.0):
        raise DatasetError(f"paired fraction must lie in (0, 1], got {c}")
    if ds.n_views != 2:
        raise DatasetError(f"missing-rate protocol needs exactly 2 views, got {ds.n_views}")
    if not ds.mask.all():
        raise DatasetError("missing-rate protocol expects a fully observed dataset")
    n = ds.n_samples
    n_paired = min(n, math.ceil(c * n - 1e-9))
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    unpaired = order[n_paired:]
    n_lose_1 = unpaired.size // 2
    mask = np.ones((2, n), dtype=bool)
    mask[0, unpaired[:n_lose_1]] = False
    mask[1, unpaired[n_lose_1:]] = False
    return ds.with_mask(mask)


def apply_four_view_protocol(ds: MultiViewDataset, seed: int = 0) -> MultiViewDataset:
    """Views 1-2 stay complete; half the samples lose view 3, the rest view 4."""
    if ds.n_views != 4:
        raise DatasetError(f"four-view protocol needs 4 views, got {ds.n_views}")
    if not ds.mask.all():
        raise DatasetError("four-view protocol expects a fully observed dataset")
    n = ds.n_samples
    order = np.random.default_rng(seed).permutation(n)
    half = n // 2
    mask = np.ones((4, n), dtype=bool)
    mask[2, order[:half]] = False
    mask[3, order[half:]] = False
    return ds.with_mask(mask)


# ---------------------------------------------------------------------------
# synthetic fixture
# ---------------------------------------------------------------------------


def synth_gaussian(
    n_clusters: int,
    per_cluster: int,
    dims: Sequence[int],
    separation: float = 10.0,
    noise: float = 0.5,
    seed: int = 0,
) -> MultiViewDataset:
    """Gaussian blobs around centers drawn on a sphere of radius ``separation``.

    Each view draws its own centers and its own noise, so views share only
    the cluster labels.
    """
    if n_clusters <= 0 or per_cluster <= 0:
        raise DatasetError("cluster counts must be positive")
    if not dims or any(int(d) <= 0 for d in dims):
        raise DatasetError(f"degenerate view dimensions {list(dims)}")
    if separation <= 0:
        raise DatasetError("separation must be positive")
    if noise < 0:
        raise DatasetError("noise must be non-negative")
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(n_clusters), per_cluster)
    n = labels.size
    views = []
    for d in dims:
        d = int(d)
        centers = rng.standard_normal((n_clusters, d))
        centers *= separation / np.linalg.norm(centers, axis=1, keepdims=True)
        x = centers[labels] + noise * rng.standard_normal((n, d))
        views.append(x.T.copy())
    mask = np.ones((len(views), n), dtype=bool)
    return MultiViewDataset(views, mask, labels, name="synth")
