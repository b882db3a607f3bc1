# -*- coding: utf-8 -*-

"""
Full-scale training runs of `gyrocal.estimator` against the averaging
baseline.

These take several minutes, set ``GYROCAL_SLOW=1`` to run them.
"""

import os
import unittest

import numpy as np

from gyrocal import estimator, evaluation, noise_sim
from gyrocal.dataset import build_dataset
from gyrocal.estimator import TrainConfig
from gyrocal.util import make_rng

SLOW = unittest.skipUnless(os.environ.get("GYROCAL_SLOW"), "set GYROCAL_SLOW=1")

FS = 200.0
DURATION = 60.0
SIGMA = 2e-3
N_SOURCES = 50
N_COPIES = 100
BIAS_SIGMA = 0.01


def synthesize(disturbance, seed):
    noise = noise_sim.NoiseCoefficients.from_sample_sigma(SIGMA, FS)
    rng = make_rng(seed, 0)
    records = []
    for index in range(N_SOURCES):
        params = noise_sim.random_error_model(rng, noise)
        records.append(
            noise_sim.synthesize_stationary(
                params,
                disturbance,
                DURATION,
                FS,
                seed=seed * 1000 + index,
                source_id="s{index:02d}".format(index=index),
            )
        )
    return records


def run(records, k_values, seed):
    datasets, results = {}, {}
    for k in k_values:
        dataset = build_dataset(
            records,
            k,
            n_copies=N_COPIES,
            bias_sigma=BIAS_SIGMA,
            noise_sigma=SIGMA / 2.0,
            seed=seed,
        )
        spec = estimator.BiasNetSpec(length=dataset.window_length)
        datasets[k] = dataset
        results[k] = estimator.train(dataset, spec, TrainConfig(seed=seed))
    test_sources = set(datasets[k_values[0]].test.sources)
    test_records = [record for record in records if record.source_id in test_sources]
    models = {k: result.network for k, result in results.items()}
    report = evaluation.evaluate(models, datasets, test_records)
    rows = {row.k: row for row in report if row.k in k_values}
    return datasets, results, rows


@SLOW
class TestCleanRegime(unittest.TestCase):
    """White noise only, K in 60, 20, 10, 6."""

    K_VALUES = (60, 20, 10, 6)

    @classmethod
    def setUpClass(cls):
        records = synthesize(noise_sim.NO_DISTURBANCE, seed=11)
        cls.datasets, cls.results, cls.rows = run(records, cls.K_VALUES, seed=0)

    def test_validation_drop(self):
        for k, result in self.results.items():
            curve = result.curve.val_rmse
            assert min(curve) <= 0.1 * curve[0], (k, curve[0], min(curve))

    def test_ordered_by_duration(self):
        best = [min(self.results[k].curve.val_rmse) for k in self.K_VALUES]
        assert all(a > b for a, b in zip(best, best[1:])), best

    def test_close_to_mean(self):
        for k, row in self.rows.items():
            ratio = row.model_rmse / row.equal_duration_rmse
            assert ratio <= 1.25, (k, ratio)

    def test_bias_equivariance(self):
        delta = np.array([1.0, -1.5, 0.5]) * BIAS_SIGMA
        for k, result in self.results.items():
            windows = self.datasets[k].test.windows[:64]
            error = estimator.equivariance_error(result.network, windows, delta)
            assert error < 0.2, (k, error)


@SLOW
class TestDisturbanceRegime(unittest.TestCase):
    """Random-phase 5-20 Hz sinusoid of five noise sigmas on every axis."""

    @classmethod
    def setUpClass(cls):
        disturbance = noise_sim.DisturbanceSpec(
            "sinusoid", amplitude=5 * SIGMA, frequency_range=(5.0, 20.0)
        )
        records = synthesize(disturbance, seed=12)
        _, cls.results, cls.rows = run(records, (60,), seed=0)

    def test_beats_mean(self):
        row = self.rows[60]
        assert row.t == 1.0
        ratio = row.model_rmse / row.equal_duration_rmse
        assert ratio <= 0.8, ratio
