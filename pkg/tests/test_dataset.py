# -*- coding: utf-8 -*-

"""Tests for `gyrocal.dataset` module."""

import os
import shutil
import tempfile
import unittest

import numpy as np

from gyrocal import dataset
from gyrocal.error_model import ErrorModelParams
from gyrocal.exceptions import (
    FormatError,
    InvalidParameterError,
    PartitionError,
    SplitError,
)
from gyrocal.noise_sim import NoiseCoefficients, synthesize_stationary
from gyrocal.records import SignalRecord


def make_records(n_records=10, duration=6.0, fs=100.0, sigma=1e-2, seed=0):
    rng = np.random.default_rng(seed)
    records = []
    for index in range(n_records):
        params = ErrorModelParams.create(
            bias=rng.uniform(-0.05, 0.05, 3),
            noise=NoiseCoefficients.from_sample_sigma(sigma, fs),
        )
        records.append(
            synthesize_stationary(
                params,
                duration=duration,
                fs=fs,
                seed=seed * 1000 + index,
                source_id="src{index:02d}".format(index=index),
            )
        )
    return records


class TestTruncate(unittest.TestCase):
    """Tests for truncate() from `gyrocal.dataset` module."""

    def setUp(self):
        self.record = make_records(1, duration=60.0, fs=200.0)[0]

    def test_shape_and_order(self):
        windows = dataset.truncate(self.record, 60)
        assert windows.shape == (60, 3, 200)
        np.testing.assert_array_equal(windows[7], self.record.samples[1400:1600].T)
        restored = np.concatenate(list(windows), axis=1)
        np.testing.assert_array_equal(restored, self.record.windows())

    def test_not_dividing(self):
        with self.assertRaises(PartitionError):
            dataset.truncate(self.record, 7)
        with self.assertRaises(PartitionError):
            dataset.truncate(self.record, 0)

    def test_label(self):
        np.testing.assert_array_equal(
            dataset.make_label(self.record), self.record.samples.mean(axis=0)
        )


class TestAugment(unittest.TestCase):
    """Tests for augment() from `gyrocal.dataset` module."""

    def setUp(self):
        window = np.random.default_rng(1).normal(0.01, 1e-3, (3, 50))
        self.sample = dataset.LabeledSample(window, window.mean(axis=1), "a")

    def test_bias_shifts_window_and_label(self):
        copies = dataset.augment(self.sample, 20, 0.01, 0.0, seed=3)
        assert len(copies) == 20
        for number, copy in enumerate(copies):
            assert copy.augmentation_id == number + 1
            assert copy.origin == "a"
            np.testing.assert_allclose(
                copy.window - copy.delta[:, np.newaxis], self.sample.window, atol=1e-15
            )
            np.testing.assert_allclose(
                copy.label - copy.delta, self.sample.label, atol=1e-15
            )

    def test_noise_leaves_label(self):
        (copy,) = dataset.augment(self.sample, 1, 0.0, 1e-3, seed=4)
        np.testing.assert_array_equal(copy.label, self.sample.label)
        assert not np.array_equal(copy.window, self.sample.window)

    def test_bias_distribution(self):
        copies = dataset.augment(self.sample, 3000, 0.01, 0.0, seed=5)
        deltas = np.array([copy.delta for copy in copies])
        assert abs(np.std(deltas) / 0.01 - 1.0) < 0.05
        assert np.all(np.abs(np.mean(deltas, axis=0)) < 1e-3)

    def test_deterministic(self):
        first = dataset.augment(self.sample, 3, 0.01, 1e-3, seed=6)
        second = dataset.augment(self.sample, 3, 0.01, 1e-3, seed=6)
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.window, b.window)

    def test_negative_sigma(self):
        with self.assertRaises(InvalidParameterError):
            dataset.augment(self.sample, 1, -0.01, 0.0, seed=0)


class TestBuildDataset(unittest.TestCase):
    """Tests for build_dataset() and split() from `gyrocal.dataset` module."""

    @classmethod
    def setUpClass(cls):
        cls.records = make_records()
        cls.data = dataset.build_dataset(
            cls.records, 6, n_copies=5, bias_sigma=0.01, noise_sigma=1e-3, seed=2
        )

    def test_counts(self):
        assert len(self.data) == 10 * 5
        assert self.data.k == 6
        assert self.data.window_length == 100
        assert self.data.window_seconds == 1.0

    def test_split_by_source(self):
        train_sources = set(self.data.train.sources)
        test_sources = set(self.data.test.sources)
        assert len(train_sources) == 8
        assert len(test_sources) == 2
        assert not train_sources & test_sources
        assert len(self.data.train) + len(self.data.test) == len(self.data)

    def test_labels_are_shifted_record_means(self):
        means = {
            record.source_id: record.samples.mean(axis=0) for record in self.records
        }
        for index in range(len(self.data)):
            sample = self.data.sample(index)
            np.testing.assert_allclose(
                sample.label - sample.delta, means[sample.origin], atol=1e-15
            )

    def test_deterministic(self):
        again = dataset.build_dataset(
            self.records, 6, n_copies=5, bias_sigma=0.01, noise_sigma=1e-3, seed=2
        )
        assert again.windows.tobytes() == self.data.windows.tobytes()
        assert again.tags == self.data.tags

    def test_all_windows(self):
        data = dataset.build_dataset(
            self.records, 6, n_copies=2, noise_sigma=1e-3, windows_per_copy="all"
        )
        assert len(data) == 10 * 2 * 6

    def test_no_augmentation(self):
        data = dataset.build_dataset(
            self.records, 3, n_copies=0, windows_per_copy="all"
        )
        assert len(data) == 30
        assert set(data.augmentation_ids) == {0}
        for index in range(len(data)):
            sample = data.sample(index)
            np.testing.assert_array_equal(sample.delta, np.zeros(3))

    def test_mixed_rates(self):
        odd = SignalRecord(50.0, np.zeros((300, 3)), source_id="odd")
        with self.assertRaises(InvalidParameterError):
            dataset.build_dataset(self.records + [odd], 6, noise_sigma=1e-3)

    def test_single_source(self):
        with self.assertRaises(SplitError):
            dataset.build_dataset(self.records[:1], 6, n_copies=2, noise_sigma=1e-3)

    def test_ratio_clamped(self):
        train, test = dataset.partition_sources(["a", "b", "c"], 0.99, seed=0)
        assert len(train) == 2
        assert len(test) == 1


class TestEstimateNoiseSigma(unittest.TestCase):
    """Tests for estimate_noise_sigma() from `gyrocal.dataset` module."""

    def test_white_noise(self):
        (record,) = make_records(1, duration=60.0, fs=200.0, sigma=1e-2)
        assert abs(dataset.estimate_noise_sigma(record) / 1e-2 - 1.0) < 0.1

    def test_short_record_falls_back(self):
        record = SignalRecord(10.0, np.random.default_rng(0).normal(0, 0.1, (50, 3)))
        sigma = dataset.estimate_noise_sigma(record)
        assert abs(sigma - np.mean(np.std(record.samples, axis=0))) < 1e-12


class TestPersistence(unittest.TestCase):
    """Tests for save_dataset() and load_dataset() from `gyrocal.dataset`."""

    def setUp(self):
        self.directory = tempfile.mkdtemp()
        self.data = dataset.build_dataset(
            make_records(4), 3, n_copies=2, noise_sigma=1e-3, seed=1
        )

    def tearDown(self):
        shutil.rmtree(self.directory)

    def test_round_trip(self):
        dataset.save_dataset(self.data, self.directory, {"config_hash": "c0ffee"})
        loaded = dataset.load_dataset(self.directory)
        assert loaded.windows.tobytes() == self.data.windows.tobytes()
        assert loaded.labels.tobytes() == self.data.labels.tobytes()
        assert loaded.origins == self.data.origins
        assert loaded.tags == self.data.tags
        assert loaded.k == 3
        assert loaded.info["config_hash"] == "c0ffee"
        manifest = dataset.read_manifest(self.directory)
        assert manifest["n_samples"] == len(self.data)
        assert len(manifest["sources"]) == 4

    def test_corrupt_file(self):
        dataset.save_dataset(self.data, self.directory)
        path = os.path.join(self.directory, dataset.WINDOWS_NAME)
        with open(path, "r+b") as fileobj:
            fileobj.seek(40)
            fileobj.write(b"\xff")
        with self.assertRaises(FormatError):
            dataset.load_dataset(self.directory)

    def test_missing_manifest(self):
        with self.assertRaises(FormatError):
            dataset.load_dataset(self.directory)
