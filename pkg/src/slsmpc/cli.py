"""Command line entry point.

Exit codes: 0 ok, 1 usage error, 2 data error, 3 numeric divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .cluster import Partition, cluster, objective, read_labels
from .config import ConfigError, load_config, resolve
from .dataset import DatasetError, load_dataset, save_dataset, synth_gaussian
from .fusion import AGGREGATIONS, ProbGraph, fuse
from .metrics import evaluate, save_report
from .pipeline import StageError, run
from .probfn import (
    PairTable,
    TrainConfig,
    TrainingDivergence,
    build_pair_table,
    cross_tables,
    load_functions,
    save_functions,
    save_loss_log,
    train,
)
from .refine import SparseGraphError, refine
from .similarity import build_knn, compute_similarity

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--aggregation", choices=AGGREGATIONS)
    p.add_argument("--metric", choices=["cosine", "l1", "l2", "l3"])
    p.add_argument("--completion", choices=["on", "off"])
    p.add_argument("--refine-passes", "--passes", type=int, dest="refine_passes")
    p.add_argument("--knn-k", type=int, dest="knn_k")
    p.add_argument("--out", help="output directory or file")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slsmpc", description="Multi-view clustering from self-learned pairwise probabilities.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("pipeline", help="run every stage from a config file")
    _common(p)

    p = sub.add_parser("synth", help="write a synthetic Gaussian dataset")
    _common(p)
    p.add_argument("--n-clusters", type=int, default=4)
    p.add_argument("--per-cluster", type=int, default=50)
    p.add_argument("--dims", type=int, nargs="+", default=[8, 8])
    p.add_argument("--separation", type=float, default=10.0)
    p.add_argument("--noise", type=float, default=0.5)

    p = sub.add_parser("train-probfn", help="build training pairs and learn the probability functions")
    _common(p)
    p.add_argument("--dataset", required=True, help="dataset manifest JSON")

    p = sub.add_parser("fuse", help="fuse saved functions over a saved pair table")
    _common(p)
    p.add_argument("--pairs", required=True)
    p.add_argument("--probfn", required=True)

    p = sub.add_parser("refine", help="graph-context refinement of a probability graph")
    _common(p)
    p.add_argument("--graph", required=True)

    p = sub.add_parser("cluster", help="probabilistic clustering of a probability graph")
    _common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--maxiter", type=int, default=20)
    p.add_argument("--no-singleton-escape", action="store_true")

    p = sub.add_parser("eval", help="score predicted labels against ground truth")
    _common(p)
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    return parser


def _config(args) -> dict:
    cfg = load_config(args.config) if args.config else resolve({})
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.aggregation:
        cfg["fusion"]["aggregation"] = args.aggregation
    if args.metric:
        cfg["similarity"]["metric"] = args.metric
    if args.completion:
        cfg["fusion"]["completion"] = args.completion == "on"
    if args.refine_passes is not None:
        cfg["refine"]["path_passes"] = args.refine_passes
        cfg["refine"]["coneighbor_passes"] = args.refine_passes
    if args.knn_k is not None:
        cfg["similarity"]["knn_k"] = args.knn_k
    return cfg


def _out(args, default: str) -> Path:
    return Path(args.out) if args.out else Path(default)


def cmd_pipeline(args) -> int:
    if not args.config:
        raise ConfigError("pipeline needs --config")
    cfg = _config(args)
    result = run(cfg, out_dir=_out(args, "run"))
    print(f"clusters: {result.partition.n_clusters}")
    print(f"objective: {result.manifest['objective']:.6f}")
    if result.metrics is not None:
        print(json.dumps(result.metrics, sort_keys=True))
    return EXIT_OK


def cmd_synth(args) -> int:
    seed = args.seed if args.seed is not None else 0
    ds = synth_gaussian(args.n_clusters, args.per_cluster, args.dims, args.separation, args.noise, seed=seed)
    path = save_dataset(ds, _out(args, "synth"))
    print(path)
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    ds = load_dataset(args.dataset)
    k = cfg["similarity"]["knn_k"]
    sims = [compute_similarity(ds, m, cfg["similarity"]["metric"]) for m in range(ds.n_views)]
    knns = [build_knn(s, k) for s in sims]
    tcfg = TrainConfig.from_dict({**cfg["train"], "seed": cfg["seed"]})
    table = build_pair_table(knns, sims, tcfg.n_segments)
    result = train(table, tcfg)
    out = _out(args, "probfn")
    out.mkdir(parents=True, exist_ok=True)
    table.save(out / "pairs.csv")
    save_functions(out / "probfn.json", result.functions, tcfg, cross_tables(table, result.functions))
    save_loss_log(out / "loss_log.csv", result.log)
    print(f"pairs: {table.n_pairs}  final loss: {result.final_loss:.6g}")
    return EXIT_OK


def cmd_fuse(args) -> int:
    cfg = _config(args)
    table = PairTable.load(args.pairs)
    fns, _, fcross = load_functions(args.probfn)
    completion = cfg["fusion"]["completion"]
    if completion == "auto":
        completion = table.n_views >= 3 and not table.observed.all()
    n = int(table.pairs.max()) + 1 if table.n_pairs else 0
    g = fuse(table.pairs, table.sims, table.observed, fns, cfg["fusion"]["aggregation"], bool(completion), fcross or None, n=n)
    out = _out(args, "fused.csv")
    g.save(out)
    print(f"edges: {g.n_edges} -> {out}")
    return EXIT_OK


def cmd_refine(args) -> int:
    cfg = _config(args)
    g = ProbGraph.load(args.graph)
    k = cfg["refine"].get("k") or cfg["similarity"]["knn_k"]
    r = refine(g, k, None, cfg["refine"]["path_passes"], cfg["refine"]["coneighbor_passes"])
    out = _out(args, "refined.csv")
    r.save(out)
    print(f"edges: {r.n_edges} -> {out}")
    return EXIT_OK


def cmd_cluster(args) -> int:
    cfg = _config(args)
    g = ProbGraph.load(args.graph)
    k = cfg["cluster"].get("k") or cfg["similarity"]["knn_k"]
    part = cluster(g, k, args.maxiter, cfg["seed"], not args.no_singleton_escape)
    out = _out(args, "partition.csv")
    part.save(out)
    print(f"clusters: {part.n_clusters}")
    print(f"objective: {objective(g, part):.6f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _config(args)
    report = evaluate(read_labels(args.pred), read_labels(args.truth), cfg["metrics"]["nmi_average"])
    if args.out:
        save_report(report, args.out)
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


COMMANDS = {
    "pipeline": cmd_pipeline,
    "synth": cmd_synth,
    "train-probfn": cmd_train,
    "fuse": cmd_fuse,
    "refine": cmd_refine,
    "cluster": cmd_cluster,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED if isinstance(exc.cause, TrainingDivergence) else EXIT_DATA
    except TrainingDivergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (DatasetError, SparseGraphError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
