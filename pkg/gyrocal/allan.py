# -*- coding: utf-8 -*-

"""
gyrocal.allan
~~~~~~~~~~~~~

Allan variance analysis in the time domain

Overlapping Allan variance with averaging interval ``tau = m / fs`` is
computed from the integrated signal ``theta``::

    avar(tau) = sum((theta[k+2m] - 2 theta[k+m] + theta[k])**2)
                / (2 tau**2 (N - 2m))

Noise coefficients are read off the slopes of the log-log curve: -1/2 for
angular random walk (N), 0 for bias instability (B) and +1/2 for rate random
walk (K).
"""

import collections
import logging
import math

import numpy as np
import pandas as pd

from gyrocal.exceptions import InsufficientDataError, InvalidParameterError

log = logging.getLogger(__name__)

#: Minimal number of non-overlapping clusters for a tau to be retained
MIN_CLUSTERS = 9

#: Ratio of Allan deviation minimum to bias instability in flat region
BIAS_INSTABILITY_FACTOR = 0.664

#: Allowed deviation of local slope from ideal value of a region
SLOPE_TOLERANCE = 0.1

#: Minimal number of curve points forming a region
MIN_REGION_POINTS = 3


class AllanCurve(collections.namedtuple("AllanCurve", ["taus", "sigma", "n_clusters"])):
    """
    Allan deviation curve

    :ivar taus: averaging intervals in s, strictly increasing
    :ivar sigma: Allan deviations in rad/s
    :ivar n_clusters: number of non-overlapping clusters per tau
    """

    __slots__ = ()

    def slope(self, tau_lo=None, tau_hi=None):
        """
        Least-squares slope of log sigma against log tau

        :param float tau_lo: (optional) lowest tau included
        :param float tau_hi: (optional) highest tau included
        :rtype: float
        """
        taus = np.asarray(self.taus)
        mask = np.ones(len(taus), dtype=bool)
        if tau_lo is not None:
            mask &= taus >= tau_lo
        if tau_hi is not None:
            mask &= taus <= tau_hi
        sigma = np.asarray(self.sigma)[mask]
        if mask.sum() < 2 or np.any(sigma <= 0):
            raise InvalidParameterError("Slope needs two or more positive points")
        return float(np.polyfit(np.log10(taus[mask]), np.log10(sigma), 1)[0])

    def to_frame(self):
        return pd.DataFrame(
            {
                "tau": self.taus,
                "sigma": self.sigma,
                "n_clusters": self.n_clusters,
            },
            columns=["tau", "sigma", "n_clusters"],
        )


NoiseEstimate = collections.namedtuple("NoiseEstimate", ["value", "tau_range"])

NoiseEstimates = collections.namedtuple("NoiseEstimates", ["n", "b", "k"])


def tau_grid(n_samples, fs, points_per_decade=20):
    """
    Logarithmic grid of averaging intervals for a record

    Intervals are integer multiples of the sample period and are clipped so
    that every tau has at least :py:const:`MIN_CLUSTERS` clusters.

    :rtype: numpy.ndarray
    """
    max_m = n_samples // MIN_CLUSTERS
    if max_m < 1:
        msg = "Record of {n} samples is too short for Allan analysis".format(
            n=n_samples
        )
        raise InsufficientDataError(msg)
    n_points = int(math.ceil(points_per_decade * math.log10(max_m))) + 1
    ms = np.unique(np.round(np.logspace(0, math.log10(max_m), n_points)).astype(int))
    return ms / float(fs)


def _cluster_sizes(taus, fs, n_samples):
    taus = np.asarray(taus, dtype=np.float64)
    ms = np.round(taus * fs).astype(int)
    off_grid = [
        tau
        for tau, m in zip(taus, ms)
        if m < 1 or not math.isclose(m, tau * fs, rel_tol=1e-9, abs_tol=1e-9)
    ]
    if off_grid:
        msg = "Taus {taus} are not positive multiples of 1/fs".format(taus=off_grid)
        raise InvalidParameterError(msg)
    too_large = [tau for tau, m in zip(taus, ms) if n_samples // m < MIN_CLUSTERS]
    if too_large:
        msg = "Taus {taus} exceed duration/{floor} of the record".format(
            taus=too_large, floor=MIN_CLUSTERS
        )
        raise InsufficientDataError(msg, taus=too_large)
    if np.any(np.diff(ms) <= 0):
        raise InvalidParameterError("Taus must be strictly increasing")
    return ms


def _overlapping_avar(signal, fs, ms):
    # referenced to the first sample so a constant input integrates to zero
    signal = signal - signal[0]
    theta = np.concatenate(([0.0], np.cumsum(signal))) / fs
    n_samples = len(signal)
    avar = np.empty(len(ms))
    for index, m in enumerate(ms):
        tau = m / fs
        diff = theta[2 * m :] - 2.0 * theta[m:-m] + theta[: n_samples + 1 - 2 * m]
        avar[index] = np.sum(diff * diff) / (2.0 * tau * tau * (n_samples + 1 - 2 * m))
    return avar


def allan_deviation(record, axis, taus=None):
    """
    Overlapping Allan deviation of one axis of a record

    :param record: :class:`~gyrocal.records.SignalRecord`
    :param axis: x, y or z
    :param taus: (optional) averaging intervals in s, by default
        :py:func:`tau_grid`
    :raises InsufficientDataError: if a tau leaves less than
        :py:const:`MIN_CLUSTERS` clusters
    :rtype: :class:`AllanCurve`
    """
    signal = record.axis(axis)
    if taus is None:
        taus = tau_grid(len(signal), record.fs)
    ms = _cluster_sizes(taus, record.fs, len(signal))
    avar = _overlapping_avar(signal, record.fs, ms)
    sigma = np.sqrt(np.maximum(avar, 0.0))
    log.debug(
        "Allan deviation of axis %s over %d taus in [%g, %g] s",
        axis,
        len(ms),
        ms[0] / record.fs,
        ms[-1] / record.fs,
    )
    return AllanCurve(ms / record.fs, sigma, len(signal) // ms)


def allan_deviation_nonoverlapping(record, axis, taus):
    """
    Brute-force non-overlapping Allan deviation

    Averages consecutive disjoint clusters and takes half mean squared
    difference of neighbours.

    :rtype: :class:`AllanCurve`
    """
    signal = record.axis(axis)
    signal = signal - signal[0]
    ms = _cluster_sizes(taus, record.fs, len(signal))
    sigma = np.empty(len(ms))
    n_clusters = np.empty(len(ms), dtype=int)
    for index, m in enumerate(ms):
        count = len(signal) // m
        means = signal[: count * m].reshape(count, m).mean(axis=1)
        diff = np.diff(means)
        sigma[index] = math.sqrt(0.5 * np.mean(diff * diff))
        n_clusters[index] = count
    return AllanCurve(ms / record.fs, sigma, n_clusters)


def _regions(local_slopes, target):
    """Contiguous index runs whose local slope is near target"""
    near = np.abs(local_slopes - target) <= SLOPE_TOLERANCE
    runs = []
    start = None
    for index, flag in enumerate(near):
        if flag and start is None:
            start = index
        elif not flag and start is not None:
            runs.append((start, index))
            start = None
    if start is not None:
        runs.append((start, len(near)))
    return [run for run in runs if run[1] - run[0] >= MIN_REGION_POINTS]


def _fixed_slope_fit(curve, slope, at_tau):
    taus = np.asarray(curve.taus)
    sigma = np.asarray(curve.sigma)
    log_tau = np.log10(taus)
    local = np.gradient(np.log10(sigma), log_tau)
    runs = _regions(local, slope)
    if not runs:
        return None
    mask = np.zeros(len(taus), dtype=bool)
    for start, stop in runs:
        mask[start:stop] = True
    weights = np.asarray(curve.n_clusters, dtype=np.float64)[mask]
    # intercept of a line with fixed slope, weighted by cluster counts
    offset = np.average(np.log10(sigma[mask]) - slope * log_tau[mask], weights=weights)
    value = 10.0 ** (offset + slope * math.log10(at_tau))
    return NoiseEstimate(float(value), (float(taus[mask][0]), float(taus[mask][-1])))


def fit_noise_coefficients(curve):
    """
    Identifies N, B and K coefficients from an Allan deviation curve

    N is the -1/2 slope line evaluated at tau = 1 s, K is the +1/2 slope line
    evaluated at tau = 3 s and B is the curve minimum over the flat region
    divided by :py:const:`BIAS_INSTABILITY_FACTOR`. Coefficients without an
    identifiable region are None.

    :param curve: :class:`AllanCurve` spanning at least two decades of tau
    :raises InvalidParameterError: if curve spans less than two decades
    :rtype: :class:`NoiseEstimates`
    """
    taus = np.asarray(curve.taus)
    sigma = np.asarray(curve.sigma)
    if len(taus) < 2 or taus[-1] / taus[0] < 100.0 * (1 - 1e-9):
        raise InvalidParameterError("Allan curve must span at least two decades")
    if np.any(sigma <= 0):
        log.debug("Allan curve has non-positive deviations, nothing identifiable")
        return NoiseEstimates(None, None, None)
    n_estimate = _fixed_slope_fit(curve, -0.5, 1.0)
    k_estimate = _fixed_slope_fit(curve, 0.5, 3.0)
    b_estimate = None
    local = np.gradient(np.log10(sigma), np.log10(taus))
    flat = _regions(local, 0.0)
    if flat:
        start, stop = min(flat, key=lambda run: sigma[run[0] : run[1]].min())
        b_estimate = NoiseEstimate(
            float(sigma[start:stop].min() / BIAS_INSTABILITY_FACTOR),
            (float(taus[start]), float(taus[stop - 1])),
        )
    log.debug("Identified N=%s B=%s K=%s", n_estimate, b_estimate, k_estimate)
    return NoiseEstimates(n_estimate, b_estimate, k_estimate)


def write_curve_csv(curve, path, comments=None):
    """Writes curve as CSV with columns tau, sigma, n_clusters"""
    with open(path, "w", newline="") as fileobj:
        for key in sorted(comments or {}):
            fileobj.write("# {key}={value}\n".format(key=key, value=comments[key]))
        curve.to_frame().to_csv(fileobj, index=False, lineterminator="\n")
