import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from slsmpc.fusion import AGGREGATIONS, ProbGraph, aggregate, complete_view, fuse
from slsmpc.probfn import PiecewiseProbFn, eval_fjoint

probs = st.floats(0.001, 0.999)


def row(*f):
    f = np.array([f], float)
    return f, np.ones_like(f, bool)


class TestAggregate:
    @pytest.mark.parametrize(
        "how,want",
        [("formula", 0.64 / 0.68), ("mean", 0.8), ("max", 0.8), ("min", 0.8), ("multiply", 0.64)],
    )
    def test_hand_values(self, how, want):
        assert aggregate(*row(0.8, 0.8), how)[0] == pytest.approx(want, abs=1e-12)

    def test_uninformative(self):
        assert aggregate(*row(0.5, 0.5))[0] == pytest.approx(0.5)

    def test_missing_view_reduces(self):
        f = np.array([[0.7, 0.0]])
        present = np.array([[True, False]])
        for how in AGGREGATIONS:
            assert aggregate(f, present, how)[0] == pytest.approx(0.7)

    def test_no_views(self):
        with pytest.raises(ValueError):
            aggregate(np.zeros((1, 2)), np.zeros((1, 2), bool))

    def test_matches_scalar_reference(self):
        rng = np.random.default_rng(0)
        f = rng.uniform(size=(50, 3))
        got = aggregate(f, np.ones_like(f, bool))
        np.testing.assert_allclose(got, [eval_fjoint(r) for r in f], rtol=1e-12)

    @given(arrays(float, 4, elements=probs), st.permutations(range(4)))
    def test_permutation_symmetric(self, f, perm):
        a = aggregate(*row(*f))[0]
        b = aggregate(*row(*f[list(perm)]))[0]
        assert a == pytest.approx(b, abs=1e-15)

    @given(arrays(float, 3, elements=probs))
    def test_neutral_view(self, f):
        a = aggregate(*row(*f, 0.5))[0]
        assert a == pytest.approx(aggregate(*row(*f))[0], abs=1e-12)

    @given(arrays(float, 3, elements=probs), st.integers(0, 2), st.floats(0.0, 0.5))
    def test_monotone(self, f, m, bump):
        g = f.copy()
        g[m] = min(0.999, g[m] + bump)
        assert aggregate(*row(*g))[0] >= aggregate(*row(*f))[0] - 1e-15

    @given(probs, st.integers(2, 5))
    def test_sharpening(self, p, m):
        out = aggregate(*row(*[p] * m))[0]
        if p >= 0.5:
            assert out >= p - 1e-12
        else:
            assert out <= p + 1e-12

    @given(probs)
    def test_single_view_coincide(self, p):
        outs = [aggregate(*row(p), how)[0] for how in AGGREGATIONS]
        np.testing.assert_allclose(outs, p, atol=1e-12)


class TestCompletion:
    def test_geometric_mean(self):
        fc = {(0, 2): np.array([0.64, 0.1]), (1, 2): np.array([0.2, 0.81])}
        assert complete_view(fc, {0: 0, 1: 1}, 2) == pytest.approx(0.72)

    def test_fixed_point(self):
        fc = {(0, 2): np.array([0.3]), (1, 2): np.array([0.3])}
        assert complete_view(fc, {0: 0, 1: 0}, 2) == pytest.approx(0.3)

    def test_single_anchor_skipped(self):
        assert complete_view({(0, 1): np.array([0.5])}, {0: 0}, 1) is None

    def test_fuse_fills_missing_view(self):
        fns = [PiecewiseProbFn(m, np.array([0.25, 0.75]), np.array([0.0, 0.5, 1.0]), np.array([0.0, 1.0])) for m in range(3)]
        fns[0].values = np.array([0.0, 0.9])
        fns[1].values = np.array([0.0, 0.9])
        fc = {(a, b): np.array([0.1, 0.64 if a == 0 else 0.81]) for a in range(3) for b in range(3) if a != b}
        pairs = np.array([[0, 1]])
        sims = np.array([[0.9, 0.9, np.nan]])
        obs = np.array([[True, True, False]])
        off = fuse(pairs, sims, obs, fns, completion=False)
        on = fuse(pairs, sims, obs, fns, completion=True, fcross=fc)
        assert off.probs[0] == pytest.approx(eval_fjoint([0.9, 0.9]))
        assert on.probs[0] == pytest.approx(eval_fjoint([0.9, 0.9, 0.72]))


class TestProbGraph:
    def test_normalises_order(self):
        g = ProbGraph(4, [3, 1], [0, 2], [0.2, 0.9])
        assert g.rows.tolist() == [0, 1] and g.cols.tolist() == [3, 2]
        assert g.get(3, 0) == 0.2 and g.get(2, 1) == 0.9 and g.get(0, 1) is None

    @pytest.mark.parametrize("rows,cols,p", [([0, 1], [1, 0], [0.1, 0.2]), ([0], [0], [0.5]), ([0], [1], [1.5])])
    def test_rejects(self, rows, cols, p):
        with pytest.raises(ValueError):
            ProbGraph(3, rows, cols, p)

    def test_csv_round_trip(self, tmp_path):
        g = ProbGraph(5, [0, 1, 2], [4, 3, 3], [0.1, 0.123456789012345, 1.0], meta={"aggregation": "mean"})
        g.save(tmp_path / "g.csv")
        head = (tmp_path / "g.csv").read_text().splitlines()[0]
        assert "provenance=fused" in head and "aggregation=mean" in head
        back = ProbGraph.load(tmp_path / "g.csv")
        assert back.n == 5
        np.testing.assert_array_equal(back.probs, g.probs)
        np.testing.assert_array_equal(back.cols, g.cols)

    def test_csr_symmetric(self):
        g = ProbGraph(3, [0, 1], [1, 2], [0.3, 0.6])
        a = g.to_csr().toarray()
        np.testing.assert_array_equal(a, a.T)
