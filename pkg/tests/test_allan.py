# -*- coding: utf-8 -*-

"""Tests for `gyrocal.allan` module."""

import io
import os
import shutil
import tempfile
import unittest

import numpy as np
import pandas as pd

from gyrocal import allan
from gyrocal.error_model import ErrorModelParams
from gyrocal.exceptions import InsufficientDataError, InvalidParameterError
from gyrocal.noise_sim import NoiseCoefficients, synthesize_stationary
from gyrocal.records import SignalRecord


def white_record(n=1e-3, duration=1000.0, fs=100.0, seed=11):
    params = ErrorModelParams.create(noise=NoiseCoefficients(n=n))
    return synthesize_stationary(params, duration=duration, fs=fs, seed=seed)


class TestTauGrid(unittest.TestCase):
    """Tests for tau_grid() from `gyrocal.allan` module."""

    def test_grid(self):
        taus = allan.tau_grid(9000, 100.0)
        assert taus[0] == 0.01
        assert taus[-1] == 10.0
        assert np.all(np.diff(taus) > 0)
        ms = taus * 100.0
        np.testing.assert_allclose(ms, np.round(ms))

    def test_too_short(self):
        with self.assertRaises(InsufficientDataError):
            allan.tau_grid(8, 100.0)


class TestAllanDeviation(unittest.TestCase):
    """Tests for allan_deviation() from `gyrocal.allan` module."""

    @classmethod
    def setUpClass(cls):
        cls.record = white_record()

    def test_constant_input(self):
        record = SignalRecord(100.0, np.full((1000, 3), 0.0123))
        curve = allan.allan_deviation(record, "x")
        assert np.all(curve.sigma == 0.0)
        estimates = allan.fit_noise_coefficients(curve)
        assert estimates == allan.NoiseEstimates(None, None, None)

    def test_white_noise_slope(self):
        curve = allan.allan_deviation(self.record, "y")
        assert abs(curve.slope(0.01, 10.0) + 0.5) < 0.05

    def test_white_noise_coefficient(self):
        curve = allan.allan_deviation(self.record, "x")
        estimates = allan.fit_noise_coefficients(curve)
        assert estimates.n is not None
        assert abs(estimates.n.value / 1e-3 - 1.0) < 0.05
        lo, hi = estimates.n.tau_range
        assert lo <= hi

    def test_cluster_floor(self):
        curve = allan.allan_deviation(self.record, "z")
        assert np.all(curve.n_clusters >= allan.MIN_CLUSTERS)

    def test_tau_too_large(self):
        record = white_record(duration=10.0)
        with self.assertRaises(InsufficientDataError) as context:
            allan.allan_deviation(record, "x", taus=[0.1, 2.0])
        assert context.exception.taus == [2.0]

    def test_tau_off_grid(self):
        with self.assertRaises(InvalidParameterError):
            allan.allan_deviation(self.record, "x", taus=[0.015])

    def test_nonoverlapping_agrees(self):
        taus = [0.01, 0.1, 1.0]
        overlapping = allan.allan_deviation(self.record, "x", taus)
        brute = allan.allan_deviation_nonoverlapping(self.record, "x", taus)
        np.testing.assert_allclose(brute.sigma, overlapping.sigma, rtol=0.1)
        np.testing.assert_array_equal(brute.n_clusters, overlapping.n_clusters)

    def test_unknown_axis(self):
        with self.assertRaises(InvalidParameterError):
            allan.allan_deviation(self.record, "w")


class TestRateRandomWalk(unittest.TestCase):
    """Allan slope and K identification of rate random walk."""

    @classmethod
    def setUpClass(cls):
        params = ErrorModelParams.create(noise=NoiseCoefficients(k=1e-4))
        cls.record = synthesize_stationary(params, duration=5000.0, fs=50.0, seed=5)

    def test_slope(self):
        curve = allan.allan_deviation(self.record, "x")
        assert abs(curve.slope(0.5, 50.0) - 0.5) < 0.05

    def test_coefficient(self):
        for axis in "xyz":
            estimates = allan.fit_noise_coefficients(
                allan.allan_deviation(self.record, axis)
            )
            assert estimates.k is not None
            assert abs(estimates.k.value / 1e-4 - 1.0) < 0.1, (axis, estimates.k)


class TestInvariance(unittest.TestCase):
    """Allan deviation under scaling and offset of the signal."""

    def setUp(self):
        self.record = white_record(duration=100.0)
        self.curve = allan.allan_deviation(self.record, "x")

    def transformed(self, scale, offset):
        return SignalRecord(self.record.fs, self.record.samples * scale + offset)

    def test_scaling(self):
        curve = allan.allan_deviation(self.transformed(-3.0, 0.0), "x")
        np.testing.assert_allclose(curve.sigma, 3.0 * self.curve.sigma, rtol=1e-9)

    def test_mean_blind(self):
        curve = allan.allan_deviation(self.transformed(1.0, 0.25), "x")
        np.testing.assert_allclose(curve.sigma, self.curve.sigma, rtol=1e-6)
        np.testing.assert_array_equal(curve.taus, self.curve.taus)


class TestFitNoiseCoefficients(unittest.TestCase):
    """Tests for fit_noise_coefficients() from `gyrocal.allan` module."""

    def test_two_decades_required(self):
        curve = allan.AllanCurve(np.array([1.0, 10.0]), np.array([1.0, 0.3]), [50, 5])
        with self.assertRaises(InvalidParameterError):
            allan.fit_noise_coefficients(curve)

    def test_ideal_curve(self):
        taus = np.logspace(-2, 3, 51)
        n, k = 2e-3, 5e-5
        sigma = np.sqrt(n**2 / taus + k**2 * taus / 3.0)
        curve = allan.AllanCurve(taus, sigma, np.full(len(taus), 100))
        estimates = allan.fit_noise_coefficients(curve)
        assert abs(estimates.n.value / n - 1.0) < 0.03
        assert abs(estimates.k.value / k - 1.0) < 0.05


class TestWriteCurve(unittest.TestCase):
    """Tests for write_curve_csv() from `gyrocal.allan` module."""

    def setUp(self):
        self.directory = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.directory)

    def test_columns_and_comments(self):
        curve = allan.AllanCurve(
            np.array([0.1, 1.0]), np.array([1e-3, 3e-4]), [100, 10]
        )
        path = os.path.join(self.directory, "curve.csv")
        allan.write_curve_csv(curve, path, {"config_hash": "abc", "seed": 3})
        with open(path) as fileobj:
            text = fileobj.read()
        assert text.startswith("# config_hash=abc\n# seed=3\ntau,sigma,n_clusters\n")
        frame = pd.read_csv(io.StringIO(text), comment="#")
        assert list(frame["n_clusters"]) == [100, 10]

