"""Self-learned monotone piecewise probability functions.

Each view ``m`` gets a step function ``f^(m)`` over ``I`` similarity
segments.  Training pairs come from the union of per-view KNN edges; each
view sorts its observed pairs by similarity and cuts them into ``I``
equally populated segments.  The values ``f^(m)_i`` are learned by making
the single-view, cross-view and multi-view functionals agree, subject to
endpoint pinning and a monotonicity projection.

Segment indices are 0-based throughout (segment ``0`` is the lowest).
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import isotonic_regression
from scipy.special import expit

from .similarity import KnnLists, SimilarityMatrix

log = logging.getLogger(__name__)

EPS = 1e-6


class TrainingDivergence(FloatingPointError):
    """Raised when the training loss stops being finite."""


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------


@dataclass
class PairTable:
    """Training pairs with per-view similarities and segment assignments.

    ``sims`` and ``segs`` are ``T x M``; entries where ``observed`` is
    false hold NaN and -1 respectively.
    """

    pairs: np.ndarray
    sims: np.ndarray
    segs: np.ndarray
    observed: np.ndarray
    seg_means: np.ndarray
    seg_bounds: np.ndarray

    @property
    def n_pairs(self) -> int:
        return self.pairs.shape[0]

    @property
    def n_views(self) -> int:
        return self.sims.shape[1]

    @property
    def n_segments(self) -> int:
        return self.seg_means.shape[1]

    def save(self, path) -> None:
        """CSV: ``p,q`` then ``sim_m,seg_m,obs_m`` per view; bounds go to a sidecar JSON."""
        path = Path(path)
        m_views = self.n_views
        header = ["p", "q"]
        for m in range(m_views):
            header += [f"sim_{m}", f"seg_{m}", f"obs_{m}"]
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for t in range(self.n_pairs):
                row = [int(self.pairs[t, 0]), int(self.pairs[t, 1])]
                for m in range(m_views):
                    if self.observed[t, m]:
                        row += [repr(float(self.sims[t, m])), int(self.segs[t, m]), 1]
                    else:
                        row += ["", -1, 0]
                w.writerow(row)
        meta = {"seg_means": self.seg_means.tolist(), "seg_bounds": self.seg_bounds.tolist()}
        path.with_suffix(".segments.json").write_text(json.dumps(meta))

    @classmethod
    def load(cls, path) -> "PairTable":
        path = Path(path)
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        m_views = (len(header) - 2) // 3
        t = len(body)
        pairs = np.zeros((t, 2), dtype=np.int64)
        sims = np.full((t, m_views), np.nan)
        segs = np.full((t, m_views), -1, dtype=np.int64)
        observed = np.zeros((t, m_views), dtype=bool)
        for k, row in enumerate(body):
            pairs[k] = int(row[0]), int(row[1])
            for m in range(m_views):
                s, g, o = row[2 + 3 * m: 5 + 3 * m]
                if int(o):
                    observed[k, m] = True
                    sims[k, m] = float(s)
                    segs[k, m] = int(g)
        meta = json.loads(path.with_suffix(".segments.json").read_text())
        return cls(pairs, sims, segs, observed, np.asarray(meta["seg_means"]), np.asarray(meta["seg_bounds"]))


@dataclass
class PiecewiseProbFn:
    """Monotone step function mapping one view's similarity to P(same class)."""

    view: int
    seg_means: np.ndarray
    seg_bounds: np.ndarray
    values: np.ndarray

    @property
    def n_segments(self) -> int:
        return self.values.size

    def segment_of(self, w) -> np.ndarray:
        """Segment index of similarity ``w``; values outside the bounds clamp to the end segments."""
        inner = self.seg_bounds[1:-1]
        return np.searchsorted(inner, np.asarray(w, dtype=np.float64), side="right")

    def __call__(self, w) -> np.ndarray:
        return self.values[self.segment_of(w)]

    def check(self, atol: float = 0.0) -> None:
        """Assert the monotone, pinned, [0, 1] constraints on the values."""
        v = self.values
        assert v[0] == 0.0 and v[-1] == 1.0, "endpoints must be pinned to 0 and 1"
        assert np.all(v >= 0.0) and np.all(v <= 1.0), "values must lie in [0, 1]"
        assert np.all(np.diff(v) >= -atol), "values must be nondecreasing"

    def to_dict(self) -> dict:
        return {
            "view": int(self.view),
            "seg_bounds": self.seg_bounds.tolist(),
            "seg_means": self.seg_means.tolist(),
            "values": self.values.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewiseProbFn":
        return cls(int(d["view"]), np.asarray(d["seg_means"], float), np.asarray(d["seg_bounds"], float), np.asarray(d["values"], float))


@dataclass
class TrainConfig:
    """Hyper-parameters of the self-learning objective and its optimizer.

    ``indj`` follows the loss definition: the last ``indj + 1`` segments
    are pulled towards 1.  Configuration files usually carry
    ``indj_plus_1`` instead; see :meth:`from_dict`.
    """

    n_segments: int = 1000
    indi: int = 10
    indj: int = 3
    lam: float = 20.0
    lr: float = 0.001
    momentum: float = 0.9
    weight_decay: float = 5e-5
    epochs: int = 2000
    seed: int = 0
    consistency: str = "mix"
    use_constraint: bool = True
    early_stop_tol: float = 1e-8
    early_stop_window: int = 50

    def __post_init__(self):
        if self.n_segments < 2:
            raise ValueError("need at least 2 segments")
        if self.indi < 1 or self.indj < 0:
            raise ValueError("indi must be >= 1 and indj >= 0")
        if max(self.indi, self.indj + 1) > self.n_segments / 4:
            raise ValueError(
                f"limit widths indi={self.indi}, indj+1={self.indj + 1} exceed a quarter of I={self.n_segments}"
            )
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.consistency not in ("mix", "direct"):
            raise ValueError(f"unknown consistency variant {self.consistency!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if "indj_plus_1" in d:
            d["indj"] = int(d.pop("indj_plus_1")) - 1
        if "I" in d:
            d["n_segments"] = d.pop("I")
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        known = cls.__dataclass_fields__
        return cls(**{k: v for k, v in d.items() if k in known})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["indj_plus_1"] = self.indj + 1
        return d


@dataclass
class TrainResult:
    functions: list[PiecewiseProbFn]
    log: list[tuple[int, float, float, float]] = field(default_factory=list)
    config: Optional[TrainConfig] = None

    @property
    def final_loss(self) -> float:
        return self.log[-1][1] if self.log else float("nan")


# ---------------------------------------------------------------------------
# training data
# ---------------------------------------------------------------------------


def build_pair_table(knns: Sequence[KnnLists], sims: Sequence[SimilarityMatrix], n_segments: int) -> PairTable:
    """Union the per-view KNN edges (undirected, deduplicated) and bin them."""
    if len(sims) < 2:
        raise ValueError("the self-learning objective needs at least 2 views")
    edges = [kn.edges() for kn in knns]
    e = np.vstack(edges) if edges else np.empty((0, 2), dtype=np.int64)
    e = np.sort(e, axis=1)
    e = e[e[:, 0] != e[:, 1]]
    pairs = np.unique(e, axis=0)
    p, q = pairs[:, 0], pairs[:, 1]
    observed = np.column_stack([s.observed[p] & s.observed[q] for s in sims])
    values = np.column_stack([s.entries[p, q] for s in sims])
    return bin_pairs(pairs, values, observed, n_segments)


def bin_pairs(pairs: np.ndarray, sims: np.ndarray, observed: np.ndarray, n_segments: int) -> PairTable:
    """Cut each view's observed pairs into equally populated similarity segments.

    Per view, the observed pairs are sorted by similarity (ties keep pair
    order) and split into ``n_segments`` contiguous runs whose sizes
    differ by at most one.
    """
    pairs = np.asarray(pairs, dtype=np.int64)
    observed = np.asarray(observed, dtype=bool)
    t, m_views = observed.shape
    n_seg = int(n_segments)
    values = np.where(observed, np.asarray(sims, dtype=np.float64), np.nan)
    segs = np.full((t, m_views), -1, dtype=np.int64)
    seg_means = np.zeros((m_views, n_seg))
    seg_bounds = np.zeros((m_views, n_seg + 1))
    for m in range(m_views):
        rows = np.flatnonzero(observed[:, m])
        if rows.size < n_seg:
            raise ValueError(f"view {m} has {rows.size} observed pairs, fewer than I={n_seg} segments")
        w = values[rows, m]
        order = np.argsort(w, kind="stable")
        chunks = np.array_split(np.arange(rows.size), n_seg)
        for i, chunk in enumerate(chunks):
            members = rows[order[chunk]]
            segs[members, m] = i
            seg_means[m, i] = values[members, m].mean()
        ws = w[order]
        seg_bounds[m, 0] = ws[0]
        seg_bounds[m, 1:n_seg] = ws[[c[0] for c in chunks[1:]]]
        seg_bounds[m, n_seg] = ws[-1]
    return PairTable(pairs, values, segs, observed, seg_means, seg_bounds)


def init_functions(table: PairTable) -> list[PiecewiseProbFn]:
    """Uniform ramp from 0 to 1 for every view."""
    n_seg = table.n_segments
    ramp = np.linspace(0.0, 1.0, n_seg)
    return [
        PiecewiseProbFn(m, table.seg_means[m].copy(), table.seg_bounds[m].copy(), ramp.copy())
        for m in range(table.n_views)
    ]


# ---------------------------------------------------------------------------
# functionals (reference forms, one entry at a time)
# ---------------------------------------------------------------------------


def eval_fsingle(fn: PiecewiseProbFn) -> np.ndarray:
    return fn.values.copy()


def eval_fcross(table: PairTable, fns: Sequence[PiecewiseProbFn], m: int, b: int) -> np.ndarray:
    """View ``b``'s probability averaged over the pairs in each segment of view ``m``.

    Only pairs observed in both views count; segments without such pairs
    fall back to view ``m``'s own value.
    """
    if m == b:
        raise ValueError("cross functional needs two distinct views")
    n_seg = table.n_segments
    out = fns[m].values.copy()
    both = table.observed[:, m] & table.observed[:, b]
    sm, sb = table.segs[both, m], table.segs[both, b]
    sums = np.bincount(sm, weights=fns[b].values[sb], minlength=n_seg)
    counts = np.bincount(sm, minlength=n_seg)
    hit = counts > 0
    out[hit] = sums[hit] / counts[hit]
    return out


def eval_fjoint(fvals) -> float:
    """Symmetric fusion of per-view probabilities (odds product)."""
    f = np.sort(np.clip(np.asarray(fvals, dtype=np.float64), EPS, 1.0 - EPS))
    if f.size == 0:
        raise ValueError("need at least one probability")
    a = np.prod(f)
    b = np.prod(1.0 - f)
    return float(a / (a + b))


def eval_fmulti(table: PairTable, fns: Sequence[PiecewiseProbFn], m: int) -> np.ndarray:
    """Mean fused probability of the pairs in each segment of view ``m``."""
    n_seg = table.n_segments
    rows = np.flatnonzero(table.observed[:, m])
    joint = np.empty(rows.size)
    for k, t in enumerate(rows):
        views = np.flatnonzero(table.observed[t])
        joint[k] = eval_fjoint([fns[v].values[table.segs[t, v]] for v in views])
    sums = np.bincount(table.segs[rows, m], weights=joint, minlength=n_seg)
    counts = np.bincount(table.segs[rows, m], minlength=n_seg)
    return sums / np.maximum(counts, 1)


def eval_fmix(fsingle, fcross: Sequence, fmulti, n_views: Optional[int] = None) -> np.ndarray:
    """Geometric blend of the multi-view functional with the single/cross mean."""
    fs = np.clip(np.asarray(fsingle, float), 0.0, 1.0)
    fm = np.clip(np.asarray(fmulti, float), 0.0, 1.0)
    fc = [np.clip(np.asarray(c, float), 0.0, 1.0) for c in fcross]
    m_views = n_views if n_views is not None else 1 + len(fc)
    mean_term = (fs + sum(fc, np.zeros_like(fs))) / m_views
    return np.sqrt(np.clip(fm * mean_term, EPS * EPS, 1.0))


# ---------------------------------------------------------------------------
# vectorised objective with analytic gradient
# ---------------------------------------------------------------------------


class Objective:
    """Loss of the self-learning problem as a function of all ``f`` values.

    The parameters are an ``M x I`` array of segment values.  Gradients
    flow through the cross and multi-view functionals as well as the
    single-view one.
    """

    def __init__(self, table: PairTable, cfg: TrainConfig):
        self.table = table
        self.cfg = cfg
        m_views, n_seg = table.n_views, table.n_segments
        if cfg.n_segments != n_seg:
            raise ValueError(f"config asks for I={cfg.n_segments} but the pair table has {n_seg} segments")
        self.M, self.I = m_views, n_seg
        obs = table.observed
        self.rows = [np.flatnonzero(obs[:, m]) for m in range(m_views)]
        self.seg = [table.segs[r, m] for m, r in enumerate(self.rows)]
        self.count = [np.bincount(s, minlength=n_seg).astype(float) for s in self.seg]
        if any(np.any(c == 0) for c in self.count):
            raise ValueError("every segment needs at least one pair")
        self.cross = {}
        for m in range(m_views):
            for b in range(m_views):
                if b == m:
                    continue
                both = np.flatnonzero(obs[:, m] & obs[:, b])
                sm, sb = table.segs[both, m], table.segs[both, b]
                cnt = np.bincount(sm, minlength=n_seg).astype(float)
                self.cross[m, b] = (sm, sb, cnt, cnt > 0)
        segs = np.where(obs, table.segs, 0)
        self._segs_flat = segs + (np.arange(m_views) * n_seg)[None, :]
        self.ri = np.arange(cfg.indi)
        self.rj = np.arange(n_seg - 1 - cfg.indj, n_seg)

    # -- forward ---------------------------------------------------------

    def functionals(self, values: np.ndarray):
        M, I = self.M, self.I
        obs = self.table.observed
        vt = values.ravel()[self._segs_flat]
        c = np.clip(vt, EPS, 1.0 - EPS)
        logit = np.where(obs, np.log(c) - np.log1p(-c), 0.0)
        joint = expit(logit.sum(axis=1))
        fs = values.copy()
        fm = np.empty((M, I))
        for m in range(M):
            fm[m] = np.bincount(self.seg[m], weights=joint[self.rows[m]], minlength=I) / self.count[m]
        fc = np.zeros((M, M, I))
        for (m, b), (sm, sb, cnt, hit) in self.cross.items():
            sums = np.bincount(sm, weights=values[b][sb], minlength=I)
            fc[m, b] = np.where(hit, sums / np.where(hit, cnt, 1.0), values[m])
        cache = {"vt": vt, "c": c, "joint": joint}
        return fs, fc, fm, cache

    def _consistency(self, fs, fc, fm):
        M, I = self.M, self.I
        others = [[b for b in range(M) if b != m] for m in range(M)]
        gfs = np.zeros((M, I))
        gfc = np.zeros((M, M, I))
        gfm = np.zeros((M, I))
        if self.cfg.consistency == "direct":
            a = 1.0 / (M * I)
            d_multi = fs - fm
            total = a * np.sum(d_multi ** 2)
            gfs += 2 * a * d_multi
            gfm -= 2 * a * d_multi
            for m in range(M):
                for b in others[m]:
                    d = fs[m] - fc[m, b]
                    total += a * np.sum(d ** 2)
                    gfs[m] += 2 * a * d
                    gfc[m, b] -= 2 * a * d
            return total, gfs, gfc, gfm

        a = 1.0 / (M * M * I)
        fsc = np.clip(fs, 0.0, 1.0)
        fmc = np.clip(fm, 0.0, 1.0)
        fcc = np.clip(fc, 0.0, 1.0)
        mean_term = np.empty((M, I))
        for m in range(M):
            mean_term[m] = (fsc[m] + sum((fcc[m, b] for b in others[m]), np.zeros(I))) / M
        u = fmc * mean_term
        uc = np.clip(u, EPS * EPS, 1.0)
        fmix = np.sqrt(uc)
        d_single = fs - fmix
        total = a * np.sum(d_single ** 2)
        gfs += 2 * a * d_single
        gmix = -2 * a * d_single
        for m in range(M):
            for b in others[m]:
                d = fc[m, b] - fmix[m]
                total += a * np.sum(d ** 2)
                gfc[m, b] += 2 * a * d
                gmix[m] -= 2 * a * d
        gu = np.where((u > EPS * EPS) & (u < 1.0), gmix * 0.5 / fmix, 0.0)
        gfm += np.where((fm >= 0.0) & (fm <= 1.0), gu * mean_term, 0.0)
        gmean = gu * fmc / M
        gfs += np.where((fs >= 0.0) & (fs <= 1.0), gmean, 0.0)
        for m in range(M):
            for b in others[m]:
                gfc[m, b] += np.where((fc[m, b] >= 0.0) & (fc[m, b] <= 1.0), gmean[m], 0.0)
        return total, gfs, gfc, gfm

    def _constraint(self, fs, fc, fm):
        M = self.M
        ri, rj = self.ri, self.rj
        gfs = np.zeros_like(fs)
        gfm = np.zeros_like(fm)
        gfc = np.zeros_like(fc)
        total = 0.0
        for arr, g in ((fm, gfm), (fs, gfs)):
            total += np.sum(arr[:, ri] ** 2) + np.sum((arr[:, rj] - 1.0) ** 2)
            g[:, ri] += 2 * arr[:, ri]
            g[:, rj] += 2 * (arr[:, rj] - 1.0)
        for m in range(M):
            for b in range(M):
                if b == m:
                    continue
                total += np.sum(fc[m, b, ri] ** 2) + np.sum((fc[m, b, rj] - 1.0) ** 2)
                gfc[m, b, ri] += 2 * fc[m, b, ri]
                gfc[m, b, rj] += 2 * (fc[m, b, rj] - 1.0)
        return total, gfs, gfc, gfm

    # -- public ------------------------------------------------------------

    def losses(self, values: np.ndarray) -> tuple[float, float, float]:
        fs, fc, fm, _ = self.functionals(values)
        cons = self._consistency(fs, fc, fm)[0]
        constr = self._constraint(fs, fc, fm)[0] if self.cfg.use_constraint else 0.0
        return self.cfg.lam * cons + constr, cons, constr

    def loss_and_grad(self, values: np.ndarray):
        """Return ``(total, consistency, constraint, grad)``; ``grad`` has the shape of ``values``."""
        M, I = self.M, self.I
        lam = self.cfg.lam
        fs, fc, fm, cache = self.functionals(values)
        cons, gfs, gfc, gfm = self._consistency(fs, fc, fm)
        gfs, gfc, gfm = lam * gfs, lam * gfc, lam * gfm
        constr = 0.0
        if self.cfg.use_constraint:
            constr, hs, hc, hm = self._constraint(fs, fc, fm)
            gfs += hs
            gfc += hc
            gfm += hm

        grad = gfs.copy()
        for (m, b), (sm, sb, cnt, hit) in self.cross.items():
            g = gfc[m, b]
            per_pair = (np.where(hit, g / np.where(hit, cnt, 1.0), 0.0))[sm]
            grad[b] += np.bincount(sb, weights=per_pair, minlength=I)
            grad[m] += np.where(hit, 0.0, g)

        joint = cache["joint"]
        gjoint = np.zeros_like(joint)
        for m in range(M):
            gjoint[self.rows[m]] += (gfm[m] / self.count[m])[self.seg[m]]
        gs = gjoint * joint * (1.0 - joint)
        vt, c = cache["vt"], cache["c"]
        inside = self.table.observed & (vt > EPS) & (vt < 1.0 - EPS)
        gc = np.where(inside, gs[:, None] / (c * (1.0 - c)), 0.0)
        for m in range(M):
            grad[m] += np.bincount(self.seg[m], weights=gc[self.rows[m], m], minlength=I)
        return lam * cons + constr, cons, constr, grad


def _values(fns: Sequence[PiecewiseProbFn]) -> np.ndarray:
    return np.vstack([fn.values for fn in fns])


def loss(table: PairTable, fns: Sequence[PiecewiseProbFn], cfg: TrainConfig) -> tuple[float, float, float]:
    """``(total, consistency, constraint)`` with ``total = lambda * consistency + constraint``."""
    return Objective(table, cfg).losses(_values(fns))


def loss_variant_direct(table: PairTable, fns: Sequence[PiecewiseProbFn], cfg: TrainConfig) -> float:
    """Consistency measured straight against the multi-view and cross functionals (no mix)."""
    direct = TrainConfig(**{**asdict(cfg), "consistency": "direct"})
    obj = Objective(table, direct)
    fs, fc, fm, _ = obj.functionals(_values(fns))
    return obj._consistency(fs, fc, fm)[0]


# ---------------------------------------------------------------------------
# projection and training
# ---------------------------------------------------------------------------


def project_monotone(values: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1], isotonic-project the interior, pin the endpoints."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    out = np.empty_like(v)
    if v.size > 2:
        out[1:-1] = isotonic_regression(v[1:-1]).x
    out[0], out[-1] = 0.0, 1.0
    return out


def train(
    table: PairTable,
    cfg: TrainConfig,
    callback: Optional[Callable[[int, np.ndarray], None]] = None,
) -> TrainResult:
    """Fit every view's function by projected momentum gradient descent.

    Full-batch SGD with PyTorch-style momentum and weight decay acts on
    the interior values; after each step every function is projected
    back onto the monotone, pinned set.  ``callback(epoch, values)`` sees
    the projected ``M x I`` parameters after each step.
    """
    obj = Objective(table, cfg)
    fns = init_functions(table)
    values = _values(fns)
    buf = None
    history: list[tuple[int, float, float, float]] = []
    for epoch in range(cfg.epochs):
        total, cons, constr, grad = obj.loss_and_grad(values)
        if not np.isfinite(total) or not np.all(np.isfinite(grad)):
            raise TrainingDivergence(f"non-finite loss at epoch {epoch}: total={total}")
        history.append((epoch, float(total), float(cons), float(constr)))
        step = grad[:, 1:-1] + cfg.weight_decay * values[:, 1:-1]
        buf = step if buf is None else cfg.momentum * buf + step
        values[:, 1:-1] -= cfg.lr * buf
        for m in range(values.shape[0]):
            values[m] = project_monotone(values[m])
        if callback is not None:
            callback(epoch, values)
        w = cfg.early_stop_window
        if w > 0 and len(history) > w and history[-1 - w][1] - history[-1][1] < cfg.early_stop_tol:
            log.debug("early stop at epoch %d", epoch)
            break
    total, cons, constr = obj.losses(values)
    if not np.isfinite(total):
        raise TrainingDivergence(f"non-finite final loss {total}")
    history.append((len(history), float(total), float(cons), float(constr)))
    for m, fn in enumerate(fns):
        fn.values = values[m].copy()
    return TrainResult(fns, history, cfg)


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------


def cross_tables(table: PairTable, fns: Sequence[PiecewiseProbFn]) -> dict[tuple[int, int], np.ndarray]:
    m_views = table.n_views
    return {(m, b): eval_fcross(table, fns, m, b) for m in range(m_views) for b in range(m_views) if m != b}


def save_functions(path, fns: Sequence[PiecewiseProbFn], cfg: Optional[TrainConfig] = None, fcross=None) -> None:
    doc = {"functions": [fn.to_dict() for fn in fns]}
    if cfg is not None:
        doc["config"] = cfg.to_dict()
    if fcross:
        doc["fcross"] = {f"{m}->{b}": v.tolist() for (m, b), v in fcross.items()}
    Path(path).write_text(json.dumps(doc))


def load_functions(path):
    """Return ``(functions, config or None, fcross dict)``."""
    doc = json.loads(Path(path).read_text())
    fns = [PiecewiseProbFn.from_dict(d) for d in doc["functions"]]
    cfg = TrainConfig.from_dict(doc["config"]) if "config" in doc else None
    fcross = {}
    for key, v in doc.get("fcross", {}).items():
        m, b = key.split("->")
        fcross[int(m), int(b)] = np.asarray(v, float)
    return fns, cfg, fcross


def save_loss_log(path, history) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "total", "consistency", "constraint"])
        for row in history:
            w.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3])])
