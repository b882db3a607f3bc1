# -*- coding: utf-8 -*-

"""
gyrocal.noise_sim
~~~~~~~~~~~~~~~~~

Stochastic gyro error sources and synthetic recordings

Five error sources are generated separately and summed:

* ``Q`` quantization noise: the integrated angle is rounded to a grid and
  differenced back to rate,
* ``N`` angular random walk: white rate noise,
* ``B`` bias instability: approximated by first-order Gauss-Markov process,
* ``K`` rate random walk: integrated white noise,
* ``R`` rate ramp: deterministic linear drift.

Sinusoid and spike disturbances are an extension of the stationary sensor
model used to exercise estimators on non-stationary inputs.
"""

import collections
import logging

import numpy as np
from scipy.signal import lfilter

from gyrocal.error_model import (
    ErrorModelParams,
    apply_error_model,
    compose_distortion,
)
from gyrocal.exceptions import InvalidParameterError
from gyrocal.records import SignalRecord
from gyrocal.util import make_rng, require_finite, require_vector3, seed_sequence

log = logging.getLogger(__name__)

#: Noise kinds in the order their streams are derived from a seed
NOISE_KINDS = ("Q", "N", "B", "K", "R")

#: Disturbance kinds
DISTURBANCE_KINDS = ("none", "sinusoid", "spikes")

_NoiseCoefficients = collections.namedtuple(
    "NoiseCoefficients", ["q", "n", "b_inst", "b_corr_time", "k", "r"]
)


class NoiseCoefficients(_NoiseCoefficients):
    """
    Coefficients of the five stochastic error sources

    :ivar q: quantization step in rad/s
    :ivar n: angular random walk density in rad/s/sqrt(Hz)
    :ivar b_inst: bias instability level in rad/s
    :ivar b_corr_time: correlation time of bias instability in s
    :ivar k: rate random walk density in rad/s*sqrt(Hz)
    :ivar r: rate ramp slope in rad/s^2
    """

    __slots__ = ()

    def __new__(cls, q=0.0, n=0.0, b_inst=0.0, b_corr_time=1.0, k=0.0, r=0.0):
        values = [float(v) for v in (q, n, b_inst, b_corr_time, k, r)]
        require_finite("noise coefficients", values)
        if any(v < 0 for v in values):
            msg = "Noise coefficients must be non-negative, got {values}".format(
                values=values
            )
            raise InvalidParameterError(msg)
        if values[2] > 0 and values[3] <= 0:
            raise InvalidParameterError("Bias instability needs positive b_corr_time")
        return super(NoiseCoefficients, cls).__new__(cls, *values)

    @classmethod
    def from_sample_sigma(cls, sigma, fs, **kwargs):
        """Coefficients with white noise of given per-sample sigma at `fs`"""
        return cls(n=sigma / np.sqrt(fs), **kwargs)

    def enabled(self):
        """Names of sources with non-zero coefficient"""
        values = {"Q": self.q, "N": self.n, "B": self.b_inst, "K": self.k, "R": self.r}
        return tuple(kind for kind in NOISE_KINDS if values[kind] > 0)

    def as_dict(self):
        return dict(self._asdict())


_DisturbanceSpec = collections.namedtuple(
    "DisturbanceSpec",
    ["kind", "amplitude", "frequency", "rate", "magnitude", "phase", "frequency_range"],
)


class DisturbanceSpec(_DisturbanceSpec):
    """
    Non-stationary disturbance added to a recording

    :ivar kind: one of none, sinusoid, spikes
    :ivar amplitude: sinusoid amplitude in rad/s
    :ivar frequency: sinusoid frequency in Hz
    :ivar rate: spike rate in events/s
    :ivar magnitude: spike magnitude in rad/s
    :ivar phase: fixed sinusoid phase in rad, None for uniform random
    :ivar frequency_range: (optional) (low, high) in Hz, frequency drawn
        uniformly per record instead of `frequency`
    """

    __slots__ = ()

    def __new__(
        cls,
        kind="none",
        amplitude=0.0,
        frequency=0.0,
        rate=0.0,
        magnitude=0.0,
        phase=None,
        frequency_range=None,
    ):
        if kind not in DISTURBANCE_KINDS:
            msg = "Unknown disturbance kind {kind!r}, expected one of {kinds}".format(
                kind=kind, kinds=", ".join(DISTURBANCE_KINDS)
            )
            raise InvalidParameterError(msg)
        if amplitude < 0 or rate < 0 or magnitude < 0:
            raise InvalidParameterError("Disturbance amplitudes must be non-negative")
        if frequency_range is not None:
            frequency_range = tuple(float(f) for f in frequency_range)
            if len(frequency_range) != 2 or not (
                0 < frequency_range[0] <= frequency_range[1]
            ):
                msg = "Invalid frequency range {frange}".format(frange=frequency_range)
                raise InvalidParameterError(msg)
        return super(DisturbanceSpec, cls).__new__(
            cls,
            kind,
            float(amplitude),
            float(frequency),
            float(rate),
            float(magnitude),
            None if phase is None else float(phase),
            frequency_range,
        )

    def check(self, fs):
        """
        Checks frequency against Nyquist limit of `fs`

        :raises InvalidParameterError: if sinusoid is not below fs/2
        """
        if self.kind != "sinusoid":
            return
        highest = self.frequency_range[1] if self.frequency_range else self.frequency
        if not highest < fs / 2.0:
            msg = "Disturbance frequency {f} Hz not below Nyquist {ny} Hz".format(
                f=highest, ny=fs / 2.0
            )
            raise InvalidParameterError(msg)

    def as_dict(self):
        data = dict(self._asdict())
        if data["frequency_range"] is not None:
            data["frequency_range"] = list(data["frequency_range"])
        return data


NO_DISTURBANCE = DisturbanceSpec()


def _check_sampling(n_samples, fs):
    if not n_samples > 0:
        msg = "Number of samples must be positive, got {n}".format(n=n_samples)
        raise InvalidParameterError(msg)
    if not fs > 0:
        msg = "Sample rate must be positive, got {fs}".format(fs=fs)
        raise InvalidParameterError(msg)


def _quantization(coeffs, rng, n_samples, fs):
    # angle advances by irregular sub-grid steps, is rounded to the grid and
    # differenced back to rate; the true rate of the advance is removed
    step = coeffs.q / fs
    advance = rng.uniform(0.0, 1.0, n_samples)
    angle = rng.uniform(0.0, 1.0) + np.concatenate(([0.0], np.cumsum(advance)))
    quantized = np.round(angle)
    return (np.diff(quantized) - advance) * step * fs


def _gauss_markov(coeffs, rng, n_samples, fs):
    alpha = np.exp(-1.0 / (fs * coeffs.b_corr_time))
    drive = rng.standard_normal(n_samples) * coeffs.b_inst * np.sqrt(1.0 - alpha**2)
    initial = rng.standard_normal() * coeffs.b_inst
    output, _ = lfilter([1.0], [1.0, -alpha], drive, zi=[alpha * initial])
    return output


def gen_noise(kind, coeffs, n_samples, fs, seed):
    """
    Generates one realization of a single error source

    :param str kind: one of Q, N, B, K, R
    :param coeffs: :class:`NoiseCoefficients`
    :param int n_samples: number of samples
    :param float fs: sample rate in Hz
    :param seed: integer or :class:`numpy.random.SeedSequence`
    :raises InvalidParameterError: on unknown kind or invalid sampling
    :return: noise in rad/s
    :rtype: numpy.ndarray
    """
    _check_sampling(n_samples, fs)
    n_samples = int(n_samples)
    rng = make_rng(seed)
    if kind == "Q":
        if coeffs.q == 0:
            return np.zeros(n_samples)
        return _quantization(coeffs, rng, n_samples, fs)
    elif kind == "N":
        return rng.standard_normal(n_samples) * (coeffs.n * np.sqrt(fs))
    elif kind == "B":
        if coeffs.b_inst == 0:
            return np.zeros(n_samples)
        return _gauss_markov(coeffs, rng, n_samples, fs)
    elif kind == "K":
        return np.cumsum(rng.standard_normal(n_samples) * (coeffs.k / np.sqrt(fs)))
    elif kind == "R":
        return coeffs.r * (np.arange(n_samples) / fs)
    msg = "Unknown noise kind {kind!r}, expected one of {kinds}".format(
        kind=kind, kinds=", ".join(NOISE_KINDS)
    )
    raise InvalidParameterError(msg)


def gen_disturbance(disturbance, n_samples, fs, seed):
    """
    Generates disturbance of a single axis

    :rtype: numpy.ndarray
    """
    if disturbance.kind == "none":
        return np.zeros(n_samples)
    rng = make_rng(seed)
    times = np.arange(n_samples) / fs
    if disturbance.kind == "sinusoid":
        if disturbance.frequency_range is not None:
            frequency = rng.uniform(*disturbance.frequency_range)
        else:
            frequency = disturbance.frequency
        phase = disturbance.phase
        if phase is None:
            phase = rng.uniform(0.0, 2.0 * np.pi)
        return disturbance.amplitude * np.sin(2.0 * np.pi * frequency * times + phase)
    signal = np.zeros(n_samples)
    n_events = rng.poisson(disturbance.rate * n_samples / fs)
    positions = rng.integers(0, n_samples, size=n_events)
    signs = rng.choice((-1.0, 1.0), size=n_events)
    np.add.at(signal, positions, signs * disturbance.magnitude)
    return signal


def synthesize_noise(coeffs, disturbance, n_samples, fs, seed):
    """
    Sum of enabled error sources and disturbance on three independent axes

    Every axis and every source draws from its own stream derived from `seed`.

    :return: Nx3 array in rad/s
    :rtype: numpy.ndarray
    """
    noise = np.zeros((n_samples, 3))
    for axis in range(3):
        for index, kind in enumerate(NOISE_KINDS):
            if kind not in coeffs.enabled():
                continue
            noise[:, axis] += gen_noise(
                kind, coeffs, n_samples, fs, seed_sequence(seed, axis, index)
            )
        noise[:, axis] += gen_disturbance(
            disturbance, n_samples, fs, seed_sequence(seed, axis, len(NOISE_KINDS))
        )
    return noise


def _n_samples(duration, fs):
    if not duration > 0:
        raise InvalidParameterError(
            "Duration must be positive, got {d}".format(d=duration)
        )
    _check_sampling(1, fs)
    return int(round(fs * duration))


def synthesize_constant_rate(
    params, rate, disturbance=NO_DISTURBANCE, duration=60.0, fs=200.0, seed=0, **kwargs
):
    """
    Synthesizes recording of a sensor turning at constant known rate

    :param params: :class:`~gyrocal.error_model.ErrorModelParams`
    :param rate: true angular rate, 3-vector in rad/s
    :param disturbance: :class:`DisturbanceSpec`
    :param float duration: duration in seconds
    :param float fs: sample rate in Hz
    :param int seed: seed of all random streams
    :param kwargs: passed to :class:`~gyrocal.records.SignalRecord`
    :rtype: :class:`~gyrocal.records.SignalRecord`
    """
    rate = require_vector3("rate", rate)
    disturbance.check(fs)
    n_samples = _n_samples(duration, fs)
    noise = synthesize_noise(params.noise, disturbance, n_samples, fs, seed)
    omega = np.broadcast_to(rate, (n_samples, 3))
    samples = apply_error_model(omega, params, noise)
    log.debug(
        "Synthesized %d samples at %g Hz, rate %s, sources %s",
        n_samples,
        fs,
        rate,
        params.noise.enabled(),
    )
    return SignalRecord(fs, samples, true_bias=params.bias, seed=seed, **kwargs)


def synthesize_stationary(
    params, disturbance=NO_DISTURBANCE, duration=60.0, fs=200.0, seed=0, **kwargs
):
    """
    Synthesizes stationary recording with known bias

    Samples are the bias plus enabled noise sources and disturbance, the
    record's `true_bias` is set to the bias of `params`.

    :rtype: :class:`~gyrocal.records.SignalRecord`
    """
    return synthesize_constant_rate(
        params, (0.0, 0.0, 0.0), disturbance, duration, fs, seed, **kwargs
    )


def random_error_model(rng, noise, bias_range=0.05, sf_range=0.02, ma_range=3e-3):
    """
    Draws random sensor parameters uniformly within given magnitudes

    :param rng: :class:`numpy.random.Generator`
    :param noise: :class:`NoiseCoefficients` used as is
    :param float bias_range: maximal absolute bias in rad/s
    :param float sf_range: maximal absolute scale factor error
    :param float ma_range: maximal absolute misalignment
    :rtype: :class:`~gyrocal.error_model.ErrorModelParams`
    """
    distortion = compose_distortion(
        rng.uniform(-sf_range, sf_range, 3), rng.uniform(-ma_range, ma_range, 6)
    )
    bias = rng.uniform(-bias_range, bias_range, 3)
    return ErrorModelParams.create(distortion=distortion, bias=bias, noise=noise)
