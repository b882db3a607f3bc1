# -*- coding: utf-8 -*-

"""Tests for `gyrocal.evaluation` module."""

import os
import shutil
import tempfile
import unittest

import numpy as np
import pandas as pd

from gyrocal import evaluation
from gyrocal.dataset import TEST, TRAIN, LabeledDataset
from gyrocal.estimator import MeanEstimator
from gyrocal.exceptions import (
    ConfigurationError,
    InvalidParameterError,
    NumericalError,
)
from gyrocal.records import SignalRecord


def noisy_record(seed, bias, fs=50.0, n_samples=600, sigma=0.01):
    rng = np.random.default_rng(seed)
    samples = np.asarray(bias) + rng.normal(0.0, sigma, (n_samples, 3))
    return SignalRecord(
        fs, samples, true_bias=bias, source_id="r{0}".format(seed), seed=seed
    )


def window_dataset(records, k):
    windows, labels, origins = [], [], []
    for record in records:
        length = len(record) // k
        for index in range(k):
            part = record.samples[index * length : (index + 1) * length]
            windows.append(part.T)
            labels.append(record.samples.mean(axis=0))
            origins.append(record.source_id)
    tags = [TEST] * len(windows)
    return LabeledDataset(
        windows, labels, origins, tags=tags, k=k, fs=records[0].fs
    )


class ConstantModel(object):
    def __init__(self, value):
        self.value = np.asarray(value)

    def predict_batch(self, windows):
        return np.tile(self.value, (len(windows), 1))


class TestMetrics(unittest.TestCase):
    """Tests for rmse() and gamma_ratio()."""

    def test_gamma_examples(self):
        assert round(evaluation.gamma_ratio(0.79598, 0.43959), 2) == 181.07
        assert round(evaluation.gamma_ratio(0.68328, 0.43959), 2) == 155.43
        assert evaluation.gamma_ratio(0.5, 0.5) == 100.0

    def test_gamma_scale_invariant(self):
        plain = evaluation.gamma_ratio(0.3, 0.7)
        scaled = evaluation.gamma_ratio(0.3 * 1e-3, 0.7 * 1e-3)
        self.assertAlmostEqual(plain, scaled, places=10)

    def test_gamma_zero_baseline(self):
        with self.assertRaises(NumericalError):
            evaluation.gamma_ratio(0.1, 0.0)

    def test_rmse_closed_form(self):
        result = evaluation.rmse([[1e-3, 1e-3, 1e-3]], [[0.0, 0.0, 0.0]])
        self.assertAlmostEqual(result.pooled, 1.0, places=12)
        for value in result.per_axis:
            self.assertAlmostEqual(value, 1.0, places=12)

    def test_rmse_pools_axes(self):
        result = evaluation.rmse([[3e-3, 0.0, 0.0], [0.0, 0.0, 0.0]], np.zeros((2, 3)))
        self.assertAlmostEqual(result.pooled, 1.0, places=12)
        self.assertAlmostEqual(result.per_axis[0], np.sqrt(4.5), places=12)
        assert result.per_axis[1] == 0.0

    def test_rmse_permutation_invariant(self):
        rng = np.random.default_rng(0)
        predictions = rng.normal(size=(20, 3))
        labels = rng.normal(size=(20, 3))
        order = rng.permutation(20)
        first = evaluation.rmse(predictions, labels)
        second = evaluation.rmse(predictions[order], labels[order])
        self.assertAlmostEqual(first.pooled, second.pooled, places=12)

    def test_rmse_invalid(self):
        with self.assertRaises(InvalidParameterError):
            evaluation.rmse(np.zeros((0, 3)), np.zeros((0, 3)))
        with self.assertRaises(InvalidParameterError):
            evaluation.rmse(np.zeros((2, 3)), np.zeros((3, 3)))
        with self.assertRaises(NumericalError):
            evaluation.rmse([[np.nan, 0.0, 0.0]], [[0.0, 0.0, 0.0]])


class TestEvaluate(unittest.TestCase):
    """Tests for evaluate()."""

    def setUp(self):
        rng = np.random.default_rng(11)
        self.records = [
            noisy_record(seed, rng.uniform(-0.05, 0.05, 3)) for seed in range(4)
        ]
        self.datasets = {k: window_dataset(self.records, k) for k in (6, 3)}

    def test_mean_model_matches_equal_duration(self):
        models = {k: MeanEstimator() for k in self.datasets}
        result = evaluation.evaluate(models, self.datasets, self.records)
        assert [row.k for row in result.rows] == [6, 3, 1]
        for row in result.rows:
            assert abs(row.model_rmse - row.equal_duration_rmse) < 1e-12

    def test_rows(self):
        models = {k: ConstantModel([0.0, 0.0, 0.0]) for k in self.datasets}
        result = evaluation.evaluate(models, self.datasets, self.records)
        assert [row.t for row in result.rows] == [2.0, 4.0, 12.0]
        baseline = result.rows[-1]
        assert baseline.gamma == 100.0
        assert baseline.model_rmse == baseline.baseline_60s_rmse
        for row in result.rows:
            self.assertAlmostEqual(
                row.gamma, 100.0 * row.model_rmse / row.baseline_60s_rmse, places=9
            )
        expected = np.sqrt(np.mean([r.true_bias ** 2 for r in self.records])) * 1e3
        assert result.rows[0].model_rmse > 0.5 * expected

    def test_uses_test_partition(self):
        dataset = self.datasets[6]
        dataset.tags = [TRAIN] * 6 + [TEST] * (len(dataset) - 6)
        result = evaluation.evaluate(
            {6: MeanEstimator()}, {6: dataset}, self.records
        )
        expected = evaluation.rmse(
            dataset.test.windows.mean(axis=2), dataset.test.labels
        )
        self.assertAlmostEqual(result.rows[0].equal_duration_rmse, expected.pooled)

    def test_k_mismatch(self):
        with self.assertRaises(ConfigurationError):
            evaluation.evaluate({6: MeanEstimator()}, self.datasets, self.records)

    def test_noise_free_baseline(self):
        records = [
            SignalRecord(
                50.0, np.tile([0.25, 0.5, 0.125], (600, 1)), [0.25, 0.5, 0.125]
            )
        ]
        with self.assertRaises(NumericalError):
            evaluation.evaluate(
                {6: MeanEstimator()}, {6: window_dataset(records, 6)}, records
            )

    def test_format_table(self):
        models = {k: MeanEstimator() for k in self.datasets}
        result = evaluation.evaluate(models, self.datasets, self.records)
        lines = result.format_table().splitlines()
        assert len(lines) == 4
        assert "gamma [%]" in lines[0]
        assert lines[-1].rstrip().endswith("100.00")

    def test_write_table(self):
        directory = tempfile.mkdtemp()
        self.addCleanup(shutil.rmtree, directory)
        models = {k: MeanEstimator() for k in self.datasets}
        result = evaluation.evaluate(models, self.datasets, self.records)
        path = os.path.join(directory, "report.csv")
        text_path = evaluation.write_table(result, path, {"config_hash": "abc"})
        assert text_path == os.path.join(directory, "report.txt")
        frame = pd.read_csv(path, comment="#")
        assert list(frame["k"]) == [6, 3, 1]
        assert list(frame["model_rmse"]) == [row.model_rmse for row in result.rows]
        with open(path) as fileobj:
            assert fileobj.readline() == "# config_hash=abc\n"


class TestReports(unittest.TestCase):
    """Tests for residual_report() and error_vs_time()."""

    def test_residual_report(self):
        record = noisy_record(3, [0.01, -0.02, 0.03])
        frame = evaluation.residual_report(record, window=50)
        assert list(frame.columns) == [
            "time_s",
            "residual_x",
            "residual_y",
            "residual_z",
            "moving_std_x",
            "moving_std_y",
            "moving_std_z",
            "envelope_x",
            "envelope_y",
            "envelope_z",
        ]
        assert len(frame) == len(record)
        final = record.samples.mean(axis=0) - record.true_bias
        np.testing.assert_allclose(
            frame[["residual_x", "residual_y", "residual_z"]].iloc[-1], final
        )
        assert frame["envelope_x"].iloc[0] == 0.0
        self.assertAlmostEqual(frame["moving_std_x"].iloc[-1], 0.01, delta=3e-3)
        np.testing.assert_allclose(
            frame["envelope_x"] * np.sqrt(np.arange(1, len(record) + 1)),
            frame["moving_std_x"],
        )
        self.assertAlmostEqual(
            frame["envelope_x"].iloc[-1], 0.01 / np.sqrt(len(record)), delta=2e-4
        )

    def test_residual_report_reference(self):
        record = SignalRecord(10.0, np.tile([1.0, 2.0, 3.0], (20, 1)))
        frame = evaluation.residual_report(record, reference=[1.0, 2.0, 2.0])
        np.testing.assert_allclose(frame["residual_z"], 1.0)
        np.testing.assert_allclose(frame["envelope_y"], 0.0, atol=1e-6)

    def test_residual_report_invalid(self):
        record = SignalRecord(10.0, np.zeros((20, 3)))
        with self.assertRaises(InvalidParameterError):
            evaluation.residual_report(record)
        with self.assertRaises(InvalidParameterError):
            evaluation.residual_report(record, reference=[0, 0, 0], window=1)

    def test_error_vs_time(self):
        records = [
            noisy_record(seed, [0.0, 0.0, 0.0], n_samples=2000) for seed in range(30)
        ]
        frame = evaluation.error_vs_time(records, [0.5, 2.0, 40.0])
        assert list(frame["time_s"]) == [0.5, 2.0, 40.0]
        errors = frame["baseline_rmse"].to_numpy()
        assert errors[0] > errors[1] > errors[2]
        self.assertAlmostEqual(errors[2], 10.0 / np.sqrt(2000), delta=0.06)

    def test_error_vs_time_too_long(self):
        with self.assertRaises(InvalidParameterError):
            evaluation.error_vs_time([noisy_record(0, [0.0, 0.0, 0.0])], [100.0])

    def test_error_curve_with_models(self):
        records = [noisy_record(seed, [0.0, 0.0, 0.0]) for seed in range(3)]
        result = evaluation.EvalResult(
            [
                evaluation.EvalRow(6, 2.0, 0.2, 0.1, 0.3, 200.0),
                evaluation.EvalRow(1, 12.0, 0.1, 0.1, 0.1, 100.0),
            ]
        )
        curve = evaluation.error_vs_time(records, [1.0, 12.0])
        merged = evaluation.error_curve_with_models(curve, result)
        assert list(merged["time_s"]) == [1.0, 2.0, 12.0]
        assert merged["model_rmse"].iloc[1] == 0.2
        assert np.isnan(merged["baseline_rmse"].iloc[1])
