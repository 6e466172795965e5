import json

import numpy as np
import pytest

from hcreduce import (
    CondensedSet,
    Dataset,
    ReductionConfig,
    dataset_hash,
    generate_blobs,
    load_cifar10,
    load_idx_pair,
    partition_homogeneous,
    read_condensed,
    write_condensed,
)
from hcreduce.datasets import quantize_points, write_idx_pair
from hcreduce.errors import CountMismatch, FormatError, StaleCondensedSet, TruncatedFile

from helpers import (
    make_dataset,
    write_cifar_batch,
    write_idx_image_file,
    write_idx_label_file,
)


class TestIdxLoading:
    def test_hand_built_pair_echoes_bytes(self, tmp_path):
        # Byte-for-byte oracle: file written by the independent struct writer.
        images = np.array([[0, 1], [2, 3]], dtype=np.uint8)
        write_idx_image_file(tmp_path / "img", images, rows=1, cols=2)
        write_idx_label_file(tmp_path / "lab", [1, 7])
        ds = load_idx_pair(tmp_path / "img", tmp_path / "lab")
        assert ds.n == 2 and ds.d == 2
        assert ds.dims == (1, 2, 1)
        assert np.array_equal(ds.features, images)
        assert np.array_equal(ds.labels, [1, 7])

    def test_empty_count_gives_empty_dataset(self, tmp_path):
        write_idx_image_file(tmp_path / "img", np.zeros((0, 6), np.uint8), 2, 3)
        write_idx_label_file(tmp_path / "lab", [])
        ds = load_idx_pair(tmp_path / "img", tmp_path / "lab")
        assert ds.n == 0 and ds.d == 6

    def test_wrong_image_magic(self, tmp_path):
        (tmp_path / "img").write_bytes(b"\x00\x00\x08\x00" + b"\x00" * 12)
        write_idx_label_file(tmp_path / "lab", [0])
        with pytest.raises(FormatError):
            load_idx_pair(tmp_path / "img", tmp_path / "lab")

    def test_wrong_label_magic(self, tmp_path):
        write_idx_image_file(tmp_path / "img", np.zeros((1, 1), np.uint8), 1, 1)
        (tmp_path / "lab").write_bytes(b"\x00\x00\x08\x03" + b"\x00\x00\x00\x01" + b"\x00")
        with pytest.raises(FormatError):
            load_idx_pair(tmp_path / "img", tmp_path / "lab")

    def test_truncated_payload(self, tmp_path):
        write_idx_image_file(tmp_path / "img", np.zeros((2, 4), np.uint8), 2, 2)
        data = (tmp_path / "img").read_bytes()
        (tmp_path / "img").write_bytes(data[:-3])
        write_idx_label_file(tmp_path / "lab", [0, 1])
        with pytest.raises(TruncatedFile):
            load_idx_pair(tmp_path / "img", tmp_path / "lab")

    def test_count_mismatch_between_files(self, tmp_path):
        write_idx_image_file(tmp_path / "img", np.zeros((2, 4), np.uint8), 2, 2)
        write_idx_label_file(tmp_path / "lab", [0, 1, 2])
        with pytest.raises(CountMismatch):
            load_idx_pair(tmp_path / "img", tmp_path / "lab")

    def test_roundtrip_random_files(self, tmp_path, rng):
        # Write with the package, reload, and compare bitwise.
        for trial in range(20):
            n = int(rng.integers(0, 12))
            rows, cols = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            features = rng.integers(0, 256, size=(n, rows * cols), dtype=np.uint8)
            labels = rng.integers(0, 10, size=n, dtype=np.int64)
            write_idx_pair(features, labels, (rows, cols, 1),
                           tmp_path / f"i{trial}", tmp_path / f"l{trial}")
            ds = load_idx_pair(tmp_path / f"i{trial}", tmp_path / f"l{trial}")
            assert np.array_equal(ds.features, features)
            assert np.array_equal(ds.labels, labels)


class TestCifarLoading:
    def test_single_zero_record(self, tmp_path):
        write_cifar_batch(tmp_path / "b0", [0], np.zeros((1, 3072), np.uint8))
        ds = load_cifar10([tmp_path / "b0"])
        assert ds.n == 1 and ds.d == 3072
        assert ds.dims == (32, 32, 3)
        assert not ds.features.any()

    def test_two_batches_concatenate_in_order(self, tmp_path, rng):
        # Oracle: the independent writer script defines the byte layout.
        pix_a = rng.integers(0, 256, size=(3, 3072), dtype=np.uint8)
        pix_b = rng.integers(0, 256, size=(3, 3072), dtype=np.uint8)
        write_cifar_batch(tmp_path / "a", [0, 1, 2], pix_a)
        write_cifar_batch(tmp_path / "b", [3, 4, 5], pix_b)
        ds = load_cifar10([tmp_path / "a", tmp_path / "b"])
        assert ds.n == 6
        assert np.array_equal(ds.features, np.concatenate([pix_a, pix_b]))
        assert np.array_equal(ds.labels, [0, 1, 2, 3, 4, 5])

    def test_bad_record_length(self, tmp_path):
        (tmp_path / "b").write_bytes(b"\x00" * 3072)  # one byte short
        with pytest.raises(FormatError):
            load_cifar10([tmp_path / "b"])

    def test_label_out_of_range(self, tmp_path):
        write_cifar_batch(tmp_path / "b", [10], np.zeros((1, 3072), np.uint8))
        with pytest.raises(FormatError):
            load_cifar10([tmp_path / "b"])


class TestGenerateBlobs:
    def test_zero_spread_collapses_each_blob(self):
        ds = generate_blobs(2, 5, 2, 0.0, 3)
        assert ds.n == 10
        for c in range(2):
            rows = ds.features[ds.labels == c]
            assert np.all(rows == rows[0])

    def test_deterministic_for_fixed_seed(self):
        a = generate_blobs(3, 10, 2, 1.0, 42)
        b = generate_blobs(3, 10, 2, 1.0, 42)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.labels, b.labels)
        assert dataset_hash(a) == dataset_hash(b)

    def test_separated_blobs_partition_into_multiple_clusters(self):
        # Two classes with distinct labels can never be one homogeneous cluster.
        ds = generate_blobs(2, 50, 2, 1.0, 7)
        assert len(partition_homogeneous(ds)) >= 2


class TestWriteCondensed:
    def _subset(self, ds, indices):
        return CondensedSet(
            kind="subset",
            source_hash=dataset_hash(ds),
            config=ReductionConfig(method="rhckon"),
            source=ds,
            indices=np.asarray(indices, dtype=np.int64),
        )

    def test_index_file_preserves_given_order(self, tmp_path):
        ds = make_dataset(np.arange(20, dtype=np.uint8).reshape(5, 4), [0, 1, 0, 1, 0])
        manifest = write_condensed(self._subset(ds, [3, 1, 2]), tmp_path)
        assert (tmp_path / "indices.txt").read_text() == "3\n1\n2\n"
        doc = json.loads(manifest.read_text())
        assert doc["counts"] == {"source": 5, "condensed": 3}
        assert list(doc) == ["kind", "config", "counts", "dims", "source_hash", "files"]

    def test_empty_subset(self, tmp_path):
        ds = make_dataset(np.zeros((2, 3), np.uint8), [0, 1])
        manifest = write_condensed(self._subset(ds, []), tmp_path)
        assert (tmp_path / "indices.txt").read_text() == ""
        assert json.loads(manifest.read_text())["counts"]["condensed"] == 0

    def test_half_up_rounding_of_synthetic_points(self, tmp_path):
        # Oracle: reference rounding table for the half-up rule.
        table = [(0.0, 0), (0.4, 0), (0.5, 1), (1.5, 2), (2.5, 3),
                 (127.5, 128), (254.49, 254), (254.5, 255), (255.0, 255)]
        values = np.array([[v for v, _ in table]])
        assert quantize_points(values).tolist()[0] == [e for _, e in table]

        ds = make_dataset(np.zeros((1, 1), np.uint8), [0])
        cset = CondensedSet(
            kind="synthetic",
            source_hash=dataset_hash(ds),
            config=ReductionConfig(method="rhc"),
            source=ds,
            points=np.array([[127.5]]),
            point_labels=np.array([0]),
        )
        write_condensed(cset, tmp_path)
        reloaded = load_idx_pair(tmp_path / "images.idx", tmp_path / "labels.idx")
        assert reloaded.features[0, 0] == 128

    def test_subset_roundtrip_is_exact(self, tmp_path, rng):
        features = rng.integers(0, 256, size=(8, 6), dtype=np.uint8)
        ds = make_dataset(features, rng.integers(0, 3, size=8), dims=(2, 3, 1))
        cset = self._subset(ds, [0, 2, 5])
        manifest = write_condensed(cset, tmp_path)
        reloaded = load_idx_pair(tmp_path / "images.idx", tmp_path / "labels.idx")
        assert np.array_equal(reloaded.features, features[[0, 2, 5]])
        back = read_condensed(manifest, ds)
        assert np.array_equal(back.indices, [0, 2, 5])
        assert back.config.method == "rhckon"

    def test_synthetic_roundtrip_keeps_exact_points(self, tmp_path):
        ds = make_dataset(np.array([[10, 20], [30, 40]], np.uint8), [0, 1])
        points = np.array([[10.25, 20.75]])
        cset = CondensedSet(
            kind="synthetic", source_hash=dataset_hash(ds),
            config=ReductionConfig(method="rhc"), source=ds,
            points=points, point_labels=np.array([1]),
        )
        manifest = write_condensed(cset, tmp_path)
        back = read_condensed(manifest, ds)
        assert np.array_equal(back.points, points)
        assert back.point_labels.tolist() == [1]

    def test_stale_manifest_rejected(self, tmp_path):
        ds = make_dataset(np.zeros((2, 2), np.uint8), [0, 1])
        manifest = write_condensed(self._subset(ds, [0]), tmp_path)
        other = make_dataset(np.ones((2, 2), np.uint8), [0, 1])
        with pytest.raises(StaleCondensedSet):
            read_condensed(manifest, other)


class TestByteLevelIdempotency:
    def test_load_write_load_is_identity(self, tmp_path, rng):
        # Byte-level: writing what was loaded reproduces the input files.
        features = rng.integers(0, 256, size=(7, 6), dtype=np.uint8)
        labels = rng.integers(0, 5, size=7, dtype=np.int64)
        write_idx_pair(features, labels, (2, 3, 1), tmp_path / "i1", tmp_path / "l1")
        ds = load_idx_pair(tmp_path / "i1", tmp_path / "l1")
        write_idx_pair(ds.features, ds.labels, ds.dims, tmp_path / "i2", tmp_path / "l2")
        assert (tmp_path / "i1").read_bytes() == (tmp_path / "i2").read_bytes()
        assert (tmp_path / "l1").read_bytes() == (tmp_path / "l2").read_bytes()

    def test_gzip_files_load_transparently(self, tmp_path, rng):
        import gzip

        features = rng.integers(0, 256, size=(3, 4), dtype=np.uint8)
        write_idx_pair(features, [0, 1, 2], (1, 4, 1), tmp_path / "i", tmp_path / "l")
        for name in ("i", "l"):
            with open(tmp_path / name, "rb") as src:
                with gzip.open(tmp_path / f"{name}.gz", "wb") as dst:
                    dst.write(src.read())
        ds = load_idx_pair(tmp_path / "i.gz", tmp_path / "l.gz")
        assert np.array_equal(ds.features, features)


class TestDatasetInvariants:
    def test_row_count_must_match_labels(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((3, 2), np.uint8), np.zeros(2, np.int64), (1, 2, 1))

    def test_dims_must_multiply_to_d(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((3, 2), np.uint8), np.zeros(3, np.int64), (1, 3, 1))

    def test_features_are_read_only(self):
        ds = make_dataset(np.zeros((2, 2), np.uint8), [0, 1])
        with pytest.raises(ValueError):
            ds.features[0, 0] = 1
