"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see the
lines interleaved with the test names).
"""

import os
import time

import numpy as np
import pytest

from conftest import planted_graph
from slsmpc.cluster import canonical_labels, cluster, objective, oracle_cluster
from slsmpc.config import resolve
from slsmpc.fusion import aggregate
from slsmpc.metrics import ari, bcubed_prf, evaluate, nmi, pairwise_prf
from slsmpc.pipeline import build_dataset, run, stage_seeds
from slsmpc.probfn import Objective, PiecewiseProbFn, TrainConfig, build_pair_table, train
from slsmpc.refine import check_path_bound
from slsmpc.similarity import build_knn, compute_similarity

SEEDS = range(5)


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} | {detail}")
        return ok

    return emit


def fixture_config(seed=0, **sections):
    user = {"profile": "synth", "seed": seed}
    for name, values in sections.items():
        user[name] = values
    return resolve(user)


def missing(rate):
    return {**resolve({"profile": "synth"})["dataset"], "missing_rate": rate}


def test_fusion_correctness(report):
    t0 = time.perf_counter()
    fused = lambda f: aggregate(f, np.ones(f.shape, bool))
    value = fused(np.array([[0.8, 0.8]]))[0]
    rng = np.random.default_rng(0)
    sizes = rng.integers(1, 6, size=10_000)
    asym = neutral = 0
    worst = 0.0
    for m in range(1, 6):
        f = rng.uniform(size=(int(np.sum(sizes == m)), m))
        base = fused(f)
        asym += int(np.sum(fused(rng.permuted(f, axis=1)) != base))
        # a 0.5 view inserted at a random column of every tuple
        padded = np.column_stack([f, np.full(len(f), 0.5)])
        gap = np.abs(fused(rng.permuted(padded, axis=1)) - base)
        worst = max(worst, float(gap.max()))
        neutral += int(np.sum(gap > 1e-12))
    elapsed = time.perf_counter() - t0
    ok = abs(value - 16 / 17) <= 1e-9 and asym == 0 and neutral == 0 and elapsed < 1.0
    report(1, ok, f"f=(0.8,0.8) -> {value:.9f}; asymmetric {asym}/10000; neutrality max gap {worst:.1e}; {elapsed:.3f}s")
    assert ok


def test_path_bound_grid(report):
    t0 = time.perf_counter()
    grid = np.linspace(0.01, 0.99, 99)
    violations = sum(not check_path_bound(b, c)[1] for b in grid for c in grid)
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and elapsed < 1.0
    report(2, ok, f"99x99 grid violations {violations}; {elapsed:.2f}s")
    assert ok


def test_probfn_training(report):
    t0 = time.perf_counter()
    cfg = fixture_config()
    seeds = stage_seeds(cfg["seed"])
    ds = build_dataset(cfg, seeds)
    sims = [compute_similarity(ds, m, cfg["similarity"]["metric"]) for m in range(ds.n_views)]
    knns = [build_knn(s, cfg["similarity"]["knn_k"]) for s in sims]
    tcfg = TrainConfig.from_dict({**cfg["train"], "seed": seeds["train"], "epochs": 2000, "early_stop_window": 0})
    table = build_pair_table(knns, sims, tcfg.n_segments)

    steps, broken = [], []

    def check(epoch, values):
        steps.append(epoch)
        for v in values:
            try:
                PiecewiseProbFn(0, np.zeros(v.size), np.zeros(v.size + 1), v).check()
            except AssertionError:
                broken.append(epoch)

    result = train(table, tcfg, callback=check)

    obj = Objective(table, tcfg)
    rng = np.random.default_rng(1)
    point = np.sort(rng.uniform(0.05, 0.95, size=(table.n_views, tcfg.n_segments)), axis=1)
    grad = obj.loss_and_grad(point)[3]
    h, worst = 1e-5, 0.0
    flat = rng.choice(point.size, size=10, replace=False)
    for idx in flat:
        m, i = np.unravel_index(idx, point.shape)
        up, dn = point.copy(), point.copy()
        up[m, i] += h
        dn[m, i] -= h
        fd = (obj.losses(up)[0] - obj.losses(dn)[0]) / (2 * h)
        worst = max(worst, abs(grad[m, i] - fd) / max(abs(fd), 1e-12))
    elapsed = time.perf_counter() - t0
    ok = result.final_loss < 1e-3 and len(steps) == 2000 and not broken and worst < 1e-4 and elapsed < 120
    report(
        3,
        ok,
        f"final loss {result.final_loss:.2e}; {len(steps)} projected steps, {len(set(broken))} with violations; "
        f"gradient max rel err {worst:.1e}; {elapsed:.1f}s",
    )
    assert ok


def test_cluster_oracle(report):
    t0 = time.perf_counter()
    matches = worse = 0
    for seed in range(100):
        g, _ = planted_graph(seed)
        hist = []
        part = cluster(g, k=g.n, seed=seed, history=hist)
        start = 0.0  # objective of the all-singleton start
        trace = [start, *hist]
        if any(b > a + 1e-12 for a, b in zip(trace, trace[1:])) or objective(g, part) > start:
            worse += 1
        matches += np.array_equal(part.labels, canonical_labels(oracle_cluster(g).labels))
    elapsed = time.perf_counter() - t0
    ok = matches >= 95 and worse == 0 and elapsed < 30
    report(4, ok, f"oracle matches {matches}/100; runs worse than start {worse}; {elapsed:.1f}s")
    assert ok


def test_end_to_end(report):
    t0 = time.perf_counter()
    full = run(fixture_config()).metrics
    half = run(fixture_config(dataset=missing(0.5))).metrics
    elapsed = time.perf_counter() - t0
    ok = full["ari"] >= 0.95 and full["nmi"] >= 0.95 and half["ari"] >= 0.85 and elapsed < 180
    report(
        5,
        ok,
        f"complete ARI {full['ari']:.4f} NMI {full['nmi']:.4f}; missing 0.5 ARI {half['ari']:.4f}; {elapsed:.1f}s",
    )
    assert ok


def _mean_ari(**sections):
    return float(np.mean([run(fixture_config(seed, **sections)).metrics["ari"] for seed in SEEDS]))


def test_ablation_directions(report):
    base = {"dataset": missing(0.5)}
    train = resolve({"profile": "synth"})["train"]
    formula = _mean_ari(**base)
    mean = _mean_ari(**base, fusion={"aggregation": "mean"})
    maxi = _mean_ari(**base, fusion={"aggregation": "max"})
    direct = _mean_ari(**base, train={**train, "consistency": "direct"})
    no_constraint = _mean_ari(**base, train={**train, "use_constraint": False})
    ok = formula >= mean and formula >= maxi and formula >= direct and no_constraint < formula
    report(
        6,
        ok,
        f"mean ARI over 5 seeds at missing 0.5: formula {formula:.4f}, mean {mean:.4f}, max {maxi:.4f}, "
        f"direct consistency {direct:.4f}, no constraint {no_constraint:.4f}",
    )
    assert ok


def _corrupt(labels, seed, fraction=0.05, value=0.1):
    def hook(g):
        intra = np.flatnonzero(labels[g.rows] == labels[g.cols])
        rng = np.random.default_rng(seed)
        hit = rng.choice(intra, size=int(round(fraction * intra.size)), replace=False)
        probs = g.probs.copy()
        probs[hit] = value
        return g.with_probs(probs, g.provenance)

    return hook


def test_refinement_effect(report):
    with_ref, without = [], []
    for seed in SEEDS:
        cfg = fixture_config(seed)
        labels = build_dataset(cfg, stage_seeds(seed)).labels
        hook = _corrupt(labels, seed)
        with_ref.append(run(cfg, graph_hook=hook).metrics["ari"])
        off = fixture_config(seed, refine={"path_passes": 0, "coneighbor_passes": 0, "k": 30})
        without.append(run(off, graph_hook=hook).metrics["ari"])
    ok = all(a >= b for a, b in zip(with_ref, without))
    pairs = ", ".join(f"{a:.3f}/{b:.3f}" for a, b in zip(with_ref, without))
    report(7, ok, f"ARI with/without refinement per seed: {pairs}")
    assert ok


def test_metric_self_checks(report):
    rng = np.random.default_rng(0)
    z = rng.integers(0, 5, size=60)
    rep = evaluate(z, z)
    exact = rep["ari"] == 1.0 and rep["nmi"] == 1.0 and rep["pairwise"]["f"] == 1.0 and rep["bcubed"]["f"] == 1.0
    errors = [
        abs(pairwise_prf([0, 0, 0, 0], [0, 0, 1, 1])[0] - 2 / 6),
        abs(pairwise_prf([0, 0, 0, 0], [0, 0, 1, 1])[2] - 0.5),
        abs(bcubed_prf([0, 0, 0], [0, 0, 1])[0] - 5 / 9),
        abs(ari([0, 0, 0, 1, 1, 1], [0, 0, 1, 1, 1, 1]) - (4 - 2.8) / (6.5 - 2.8)),
        abs(ari([0, 0, 0, 0], [0, 0, 1, 1])),
    ]
    c = np.array([[2, 0], [1, 1], [0, 2]]) / 6
    pi, pj = c.sum(1), c.sum(0)
    nz = c > 0
    mi = np.sum(c[nz] * np.log(c[nz] / np.outer(pi, pj)[nz]))
    hx = lambda p: -np.sum(p * np.log(p))
    errors.append(abs(nmi([0, 0, 1, 1, 2, 2], [0, 0, 0, 1, 1, 1]) - mi / np.sqrt(hx(pi) * hx(pj))))
    ok = exact and max(errors) <= 1e-9
    report(8, ok, f"identity exact {exact}; hand fixtures max error {max(errors):.1e}")
    assert ok


HANDWRITTEN = os.environ.get("SLSMPC_HANDWRITTEN")


@pytest.mark.skipif(not HANDWRITTEN, reason="set SLSMPC_HANDWRITTEN to a 4-view manifest to run the stretch check")
def test_handwritten_stretch(report):
    base = {"source": "manifest", "manifest": HANDWRITTEN}
    four = run(resolve({"profile": "handwritten-v4", "dataset": base})).metrics["ari"] * 100
    ds_cfg = resolve({"profile": "handwritten-v2", "dataset": base})
    ds = build_dataset(ds_cfg, stage_seeds(ds_cfg["seed"]))
    two_ds = type(ds)(ds.views[:2], ds.mask[:2], ds.labels, name=ds.name)
    two = run(ds_cfg, dataset=two_ds).metrics["ari"] * 100
    ok = abs(two - 85.73) <= 3.0 and abs(four - 92.56) <= 3.0
    report(9, ok, f"Handwritten ARI 2-view {two:.2f} (target 85.73), 4-view {four:.2f} (target 92.56); non-binding")
    if not ok:
        pytest.xfail("stretch target missed")
