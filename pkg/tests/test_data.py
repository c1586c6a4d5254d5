import gzip
import struct

import numpy as np
import pytest

from bls_ridge import data
from bls_ridge.data import (
    CsvFormatError,
    Dataset,
    IdxCountMismatchError,
    IdxMagicError,
    IdxTruncatedError,
    load_csv,
    load_idx,
    one_hot,
    save_csv,
    synth_blobs,
    write_idx,
)
from conftest import requires_mnist


def _write_pair(tmp_path, images, labels):
    ip, lp = tmp_path / "img", tmp_path / "lab"
    write_idx(ip, images)
    write_idx(lp, labels)
    return ip, lp


class TestOneHot:
    def test_rows(self):
        Y = one_hot([2, 0, 1], 3)
        np.testing.assert_array_equal(Y, np.eye(3)[[2, 0, 1]])

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            one_hot([3], 3)


class TestIdx:
    def test_all_white_image(self, tmp_path):
        ip, lp = _write_pair(tmp_path, np.full((1, 2, 3), 255, np.uint8), np.array([7], np.uint8))
        ds = load_idx(ip, lp)
        np.testing.assert_array_equal(ds.X, np.ones((1, 6)))
        assert ds.Y[0, 7] == 1.0 and ds.Y.sum() == 1.0 and ds.labels[0] == 7

    def test_pixel_scaling(self, tmp_path):
        img = np.arange(6, dtype=np.uint8).reshape(1, 2, 3) * 51
        ip, lp = _write_pair(tmp_path, img, np.array([0], np.uint8))
        np.testing.assert_array_equal(load_idx(ip, lp).X, img.reshape(1, -1) / 255.0)

    def test_header_bytes(self, tmp_path):
        ip, _ = _write_pair(tmp_path, np.zeros((2, 3, 4), np.uint8), np.zeros(2, np.uint8))
        raw = ip.read_bytes()
        assert struct.unpack(">4I", raw[:16]) == (0x803, 2, 3, 4)

    def test_bad_magic(self, tmp_path):
        ip, lp = _write_pair(tmp_path, np.zeros((1, 2, 2), np.uint8), np.zeros(1, np.uint8))
        with pytest.raises(IdxMagicError):
            load_idx(lp, ip)  # swapped

    def test_truncated(self, tmp_path):
        ip, lp = _write_pair(tmp_path, np.zeros((3, 4, 4), np.uint8), np.zeros(3, np.uint8))
        ip.write_bytes(ip.read_bytes()[:-5])
        with pytest.raises(IdxTruncatedError):
            load_idx(ip, lp)

    def test_truncated_header(self, tmp_path):
        ip, lp = _write_pair(tmp_path, np.zeros((3, 4, 4), np.uint8), np.zeros(3, np.uint8))
        ip.write_bytes(ip.read_bytes()[:9])
        with pytest.raises(IdxTruncatedError):
            load_idx(ip, lp)

    def test_count_mismatch(self, tmp_path):
        ip, lp = _write_pair(tmp_path, np.zeros((3, 2, 2), np.uint8), np.zeros(2, np.uint8))
        with pytest.raises(IdxCountMismatchError):
            load_idx(ip, lp)

    def test_errors_are_distinct(self):
        kinds = {IdxMagicError, IdxTruncatedError, IdxCountMismatchError}
        assert len(kinds) == 3 and not any(issubclass(a, b) for a in kinds for b in kinds if a is not b)

    def test_gzip(self, tmp_path):
        ip, lp = _write_pair(tmp_path, np.full((2, 2, 2), 51, np.uint8), np.array([1, 0], np.uint8))
        gz = tmp_path / "img.gz"
        gz.write_bytes(gzip.compress(ip.read_bytes()))
        np.testing.assert_array_equal(load_idx(gz, lp).X, load_idx(ip, lp).X)

    def test_deterministic(self, tmp_path):
        rng = np.random.default_rng(1)
        ip, lp = _write_pair(tmp_path, rng.integers(0, 256, (4, 3, 3), dtype=np.uint8),
                             rng.integers(0, 10, 4, dtype=np.uint8))
        a, b = load_idx(ip, lp), load_idx(ip, lp)
        np.testing.assert_array_equal(a.X, b.X)
        np.testing.assert_array_equal(a.Y, b.Y)

    def test_cache_dir_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv(data.DATA_ENV, str(tmp_path))
        assert data.data_dir() == tmp_path
        assert data.mnist_paths("test")[0] == tmp_path / "mnist" / "t10k-images-idx3-ubyte"
        with pytest.raises(FileNotFoundError, match=data.DATA_ENV):
            data.load_mnist("train")

    @requires_mnist
    def test_real_mnist_train(self):
        ds = data.load_mnist("train")
        assert ds.X.shape == (60000, 784) and ds.Y.shape == (60000, 10)
        assert ds.X.min() == 0.0 and ds.X.max() == 1.0
        np.testing.assert_array_equal(ds.Y.sum(axis=1), 1.0)


class TestCsv:
    def test_three_rows_two_classes(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("1,2,a\n3,4,b\n5,6,a\n")
        ds = load_csv(p)
        assert ds.Y.shape == (3, 2)
        np.testing.assert_array_equal(ds.labels, [0, 1, 0])
        np.testing.assert_allclose(ds.X, [[0, 0], [0.5, 0.5], [1, 1]])

    def test_constant_column_scales_to_zero(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("7,1,0\n7,2,1\n")
        np.testing.assert_array_equal(load_csv(p).X[:, 0], 0.0)

    def test_label_column_and_header(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("y,x1,x2\n1,0,5\n0,1,6\n")
        ds = load_csv(p, label_column=0, header=True)
        np.testing.assert_array_equal(ds.labels, [0, 1])
        np.testing.assert_allclose(ds.X, [[0, 0], [1, 1]])

    def test_ragged(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("1,2,0\n3,1\n")
        with pytest.raises(CsvFormatError, match="row 1"):
            load_csv(p)

    def test_non_numeric(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("1,x,0\n")
        with pytest.raises(CsvFormatError):
            load_csv(p)

    def test_round_trip(self, tmp_path):
        p = tmp_path / "raw.csv"
        rng = np.random.default_rng(3)
        rows = [",".join(repr(float(v)) for v in rng.standard_normal(4)) + f",{c}" for c in "abcab"]
        p.write_text("\n".join(rows) + "\n")
        ds = load_csv(p)
        q = tmp_path / "copy.csv"
        save_csv(q, ds)
        back = load_csv(q)
        np.testing.assert_array_equal(back.X, ds.X)
        np.testing.assert_array_equal(back.Y, ds.Y)
        np.testing.assert_array_equal(back.labels, ds.labels)


class TestSynth:
    def test_same_seed_identical_bytes(self):
        a, b = synth_blobs(5, 100, 3, 4, 3.0), synth_blobs(5, 100, 3, 4, 3.0)
        assert a.X.tobytes() == b.X.tobytes() and a.labels.tobytes() == b.labels.tobytes()

    def test_invariants(self):
        ds = synth_blobs(0, 50, 2, 5)
        assert ds.X.min() >= 0 and ds.X.max() <= 1
        np.testing.assert_array_equal(ds.Y.sum(axis=1), 1.0)
        assert set(ds.labels) == set(range(5))

    @pytest.mark.parametrize("args", [(0, 0, 2, 2), (0, 3, 2, 4), (0, 10, 0, 2)])
    def test_invalid_counts(self, args):
        with pytest.raises(ValueError):
            synth_blobs(*args)


class TestDataset:
    def test_split_and_subset(self):
        ds = synth_blobs(1, 20, 2, 2)
        tr, te = ds.split(15, seed=0)
        assert len(tr) == 15 and len(te) == 5
        assert sorted(np.concatenate([tr.X[:, 0], te.X[:, 0]])) == sorted(ds.X[:, 0])
        assert len(ds.head(4)) == 4

    def test_row_mismatch(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((2, 1)), np.zeros((3, 1)), np.zeros(2))
