import numpy as np
import pytest

from slsmpc.dataset import synth_gaussian
from slsmpc.fusion import ProbGraph
from slsmpc.probfn import bin_pairs


@pytest.fixture(scope="session")
def blobs():
    """Four well separated clusters of 50 samples in two 8-d views."""
    return synth_gaussian(4, 50, [8, 8], separation=10.0, noise=0.5, seed=0)


@pytest.fixture
def small_table():
    """Random two-view pair table with 60 pairs in 6 segments."""
    rng = np.random.default_rng(3)
    t = 60
    pairs = np.column_stack([np.arange(t), np.arange(t) + 100])
    sims = rng.uniform(size=(t, 2))
    observed = np.ones((t, 2), dtype=bool)
    observed[:8, 0] = False
    observed[8:14, 1] = False
    return bin_pairs(pairs, sims, observed, 6)


def make_graph(n, edges):
    """ProbGraph from ``{(i, j): p}``."""
    keys = sorted(edges)
    rows = np.array([k[0] for k in keys], dtype=np.int64)
    cols = np.array([k[1] for k in keys], dtype=np.int64)
    probs = np.array([edges[k] for k in keys], dtype=float)
    return ProbGraph(n, rows, cols, probs)


def planted_graph(seed, max_n=9):
    """Complete graph on a random planted partition.

    Intra-cluster probabilities come from [0.8, 1.0], inter-cluster ones
    from [0.0, 0.2].
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, max_n + 1))
    truth = rng.integers(0, int(rng.integers(1, n + 1)), size=n)
    iu, ju = np.triu_indices(n, 1)
    same = truth[iu] == truth[ju]
    p = np.where(same, rng.uniform(0.8, 1.0, iu.size), rng.uniform(0.0, 0.2, iu.size))
    return ProbGraph(n, iu, ju, p), truth
