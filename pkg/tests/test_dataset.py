import json

import numpy as np
import pytest

from slsmpc.dataset import (
    DatasetError,
    MultiViewDataset,
    apply_four_view_protocol,
    apply_missing_protocol,
    load_dataset,
    save_dataset,
    synth_gaussian,
)


class TestValidation:
    def test_shape_mismatch(self):
        with pytest.raises(DatasetError, match="shape mismatch"):
            MultiViewDataset([np.ones((3, 10)), np.ones((3, 9))], np.ones((2, 10), bool))

    def test_zero_dimension(self):
        with pytest.raises(DatasetError):
            MultiViewDataset([np.ones((0, 4))], np.ones((1, 4), bool))

    def test_sample_in_no_view(self):
        mask = np.ones((2, 4), bool)
        mask[:, 2] = False
        with pytest.raises(DatasetError, match="zero views"):
            MultiViewDataset([np.ones((2, 4)), np.ones((3, 4))], mask)

    def test_nan_only_allowed_when_unobserved(self):
        x = np.ones((2, 4))
        x[0, 1] = np.nan
        mask = np.ones((2, 4), bool)
        with pytest.raises(DatasetError):
            MultiViewDataset([x, np.ones((2, 4))], mask)
        mask[0, 1] = False
        ds = MultiViewDataset([x, np.ones((2, 4))], mask)
        assert ds.views[0][0, 1] == 0.0

    def test_label_length(self):
        with pytest.raises(DatasetError):
            MultiViewDataset([np.ones((2, 4))], np.ones((1, 4), bool), labels=[0, 1])


class TestIO:
    def test_manifest_round_trip(self, tmp_path, blobs):
        ds = apply_missing_protocol(blobs, 0.5, seed=1)
        path = save_dataset(ds, tmp_path / "d")
        assert load_dataset(path) == ds

    def test_csv_per_view(self, tmp_path):
        rng = np.random.default_rng(0)
        a, b = rng.normal(size=(3, 5)), rng.normal(size=(2, 5))
        np.savetxt(tmp_path / "a.csv", a, delimiter=",")
        np.savetxt(tmp_path / "b.csv", b, delimiter=",")
        ds = load_dataset(tmp_path, format="csv-per-view")
        assert ds.dims == [3, 2]
        assert ds.mask.all()
        np.testing.assert_allclose(ds.views[1], b)

    def test_manifest_mismatch(self, tmp_path):
        np.savetxt(tmp_path / "a.csv", np.ones((2, 5)), delimiter=",")
        np.savetxt(tmp_path / "b.csv", np.ones((2, 4)), delimiter=",")
        (tmp_path / "m.json").write_text(json.dumps({"views": ["a.csv", "b.csv"]}))
        with pytest.raises(DatasetError, match="shape mismatch"):
            load_dataset(tmp_path / "m.json")

    def test_unknown_format(self, tmp_path):
        with pytest.raises(DatasetError):
            load_dataset(tmp_path, format="parquet")


class TestMissingProtocol:
    @pytest.mark.parametrize("n,c", [(200, 0.5), (11, 0.3), (10, 1.0), (7, 0.1)])
    def test_counts(self, n, c):
        ds = synth_gaussian(1, n, [2, 2], seed=0)
        out = apply_missing_protocol(ds, c, seed=4)
        n_paired = int(np.ceil(c * n - 1e-9))
        rest = n - n_paired
        stats = out.mask_stats()
        assert stats["fully_observed"] == n_paired
        assert stats["missing_view_1"] == rest // 2
        assert stats["missing_view_2"] == rest - rest // 2
        assert out.mask.any(axis=0).all()

    def test_deterministic(self, blobs):
        a = apply_missing_protocol(blobs, 0.5, seed=9)
        b = apply_missing_protocol(blobs, 0.5, seed=9)
        c = apply_missing_protocol(blobs, 0.5, seed=10)
        assert np.array_equal(a.mask, b.mask)
        assert not np.array_equal(a.mask, c.mask)

    def test_rejects_bad_fraction(self, blobs):
        with pytest.raises(DatasetError):
            apply_missing_protocol(blobs, 0.0)

    def test_four_views(self):
        ds = synth_gaussian(2, 5, [2, 2, 2, 2], seed=0)
        out = apply_four_view_protocol(ds, seed=0)
        assert out.mask[:2].all()
        assert np.array_equal(out.mask[2], ~out.mask[3])
        assert out.mask[2].sum() == 5


class TestSynth:
    def test_shapes_and_labels(self, blobs):
        assert blobs.n_samples == 200
        assert blobs.dims == [8, 8]
        assert np.bincount(blobs.labels).tolist() == [50] * 4

    def test_seeded(self):
        a = synth_gaussian(3, 4, [2], seed=5)
        assert a == synth_gaussian(3, 4, [2], seed=5)
        assert a != synth_gaussian(3, 4, [2], seed=6)

    @pytest.mark.parametrize("kw", [{"separation": 0.0}, {"noise": -1.0}, {"dims": [0]}])
    def test_rejects_degenerate(self, kw):
        args = {"n_clusters": 2, "per_cluster": 3, "dims": [2], **kw}
        with pytest.raises(DatasetError):
            synth_gaussian(**args)
