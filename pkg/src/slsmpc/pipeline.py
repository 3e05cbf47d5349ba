"""End-to-end run: similarity, self-learning, fusion, refinement, clustering."""

from __future__ import annotations

import json
import logging
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy

from . import __version__
from .cluster import Partition, cluster, objective
from .config import config_hash, resolve
from .dataset import (
    MultiViewDataset,
    apply_four_view_protocol,
    apply_missing_protocol,
    load_dataset,
    save_dataset,
    synth_gaussian,
)
from .fusion import ProbGraph, fuse
from .metrics import evaluate, save_report
from .probfn import (
    PairTable,
    TrainConfig,
    TrainResult,
    build_pair_table,
    cross_tables,
    save_functions,
    save_loss_log,
    train,
)
from .refine import refine
from .similarity import build_knn, compute_similarity, knn_union

log = logging.getLogger(__name__)

STAGES = ("dataset", "similarity", "train", "fuse", "refine", "cluster", "eval")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


def stage_seeds(root: int) -> dict[str, int]:
    """Independent per-stage seeds derived from one root seed."""
    children = np.random.SeedSequence(int(root)).spawn(4)
    names = ("synth", "missing", "train", "cluster")
    return {name: int(c.generate_state(1)[0]) for name, c in zip(names, children)}


@dataclass
class RunResult:
    config: dict
    dataset: MultiViewDataset
    table: PairTable
    training: TrainResult
    fused: ProbGraph
    refined: ProbGraph
    partition: Partition
    metrics: Optional[dict]
    manifest: dict = field(default_factory=dict)


def build_dataset(cfg: dict, seeds: dict[str, int]) -> MultiViewDataset:
    dcfg = cfg["dataset"]
    if dcfg["source"] == "synth":
        s = dcfg["synth"]
        ds = synth_gaussian(s["n_clusters"], s["per_cluster"], s["dims"], s["separation"], s["noise"], seed=seeds["synth"])
    elif dcfg["source"] == "manifest":
        ds = load_dataset(dcfg["manifest"], dcfg.get("format", "json-manifest"))
    else:
        raise ValueError(f"unknown dataset source {dcfg['source']!r}")
    if dcfg.get("four_view_protocol"):
        ds = apply_four_view_protocol(ds, seed=seeds["missing"])
    eta = float(dcfg.get("missing_rate") or 0.0)
    if eta > 0.0:
        ds = apply_missing_protocol(ds, 1.0 - eta, seed=seeds["missing"])
    return ds


def run(
    cfg: dict | None = None,
    out_dir=None,
    dataset: Optional[MultiViewDataset] = None,
    graph_hook: Optional[Callable[[ProbGraph], ProbGraph]] = None,
) -> RunResult:
    """Run every stage.  ``graph_hook`` may rewrite the fused graph before refinement."""
    cfg = resolve(cfg)
    seeds = stage_seeds(cfg["seed"])
    timings: dict[str, float] = {}
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    def stage(name, fn):
        t0 = time.perf_counter()
        try:
            result = fn()
        except StageError:
            raise
        except Exception as exc:
            raise StageError(name, exc) from exc
        timings[name] = time.perf_counter() - t0
        log.info("stage %s done in %.2fs", name, timings[name])
        return result

    ds = dataset if dataset is not None else stage("dataset", lambda: build_dataset(cfg, seeds))
    k = int(cfg["similarity"]["knn_k"])
    metric = cfg["similarity"]["metric"]

    def similarity_stage():
        sims = [compute_similarity(ds, m, metric) for m in range(ds.n_views)]
        return sims, [build_knn(s, k) for s in sims]

    sims, knns = stage("similarity", similarity_stage)
    tcfg = TrainConfig.from_dict({**cfg["train"], "seed": seeds["train"]})
    table = stage("pairs", lambda: build_pair_table(knns, sims, tcfg.n_segments))
    training = stage("train", lambda: train(table, tcfg))
    fns = training.functions

    completion = cfg["fusion"].get("completion", "auto")
    if completion == "auto":
        completion = ds.n_views >= 3 and not ds.mask.all()
    completion = bool(completion)
    fcross = cross_tables(table, fns) if completion or out is not None else None
    fused = stage(
        "fuse",
        lambda: fuse(table.pairs, table.sims, table.observed, fns, cfg["fusion"]["aggregation"], completion, fcross, n=ds.n_samples),
    )
    work = graph_hook(fused) if graph_hook is not None else fused

    rk = cfg["refine"].get("k") or k
    union = knn_union(knns, ds.n_samples)
    refined = stage(
        "refine",
        lambda: refine(work, rk, union, cfg["refine"]["path_passes"], cfg["refine"]["coneighbor_passes"]),
    )
    ck = cfg["cluster"].get("k") or k
    part = stage(
        "cluster",
        lambda: cluster(refined, ck, cfg["cluster"]["maxiter"], seeds["cluster"], cfg["cluster"]["singleton_escape"]),
    )
    metrics = None
    if ds.labels is not None:
        metrics = stage("eval", lambda: evaluate(part, ds.labels, cfg["metrics"]["nmi_average"]))

    manifest = {
        "config_hash": config_hash(cfg),
        "seed": cfg["seed"],
        "stage_seeds": seeds,
        "versions": {
            "slsmpc": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "wall_time_s": timings,
        "mask": ds.mask_stats(),
        "n_pairs": int(table.n_pairs),
        "train_epochs": len(training.log) - 1,
        "final_loss": training.final_loss,
        "n_clusters": part.n_clusters,
        "objective": objective(refined, part),
        "completion": completion,
    }
    if out is not None:
        save_dataset(ds, out / "dataset")
        table.save(out / "pairs.csv")
        save_functions(out / "probfn.json", fns, tcfg, fcross)
        save_loss_log(out / "loss_log.csv", training.log)
        fused.save(out / "fused.csv")
        refined.save(out / "refined.csv")
        part.save(out / "partition.csv")
        if metrics is not None:
            save_report(metrics, out / "metrics.json")
        (out / "config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True))
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return RunResult(cfg, ds, table, training, fused, refined, part, metrics, manifest)
