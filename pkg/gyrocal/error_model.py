# -*- coding: utf-8 -*-

"""
gyrocal.error_model
~~~~~~~~~~~~~~~~~~~

Deterministic part of the gyroscope sensor model

Measured rate is modelled as::

    output = M . omega + b_g + w

where ``M = I + SF + MA`` is the distortion matrix built from scale factor
errors on the diagonal and misalignment (cross-axis coupling) errors off the
diagonal, ``b_g`` is the constant bias and ``w`` the stochastic noise. All
rates are in rad/s.
"""

import collections

import numpy as np

from gyrocal.exceptions import DimensionError, InvalidParameterError
from gyrocal.util import require_finite, require_vector3

#: Positions of misalignment entries in row-major order: xy, xz, yx, yz, zx, zy
MA_INDICES = ((0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1))

#: Matrices with smaller absolute determinant are rejected
MIN_DETERMINANT = 1e-6

#: Bound on absolute value of scale factor and misalignment entries
MAX_DISTORTION = 0.5

AXES = ("x", "y", "z")


class DistortionMatrix(object):
    """
    Distortion matrix of a gyro triad

    :param m: 3x3 matrix
    :raises InvalidParameterError: if matrix is not finite, not 3x3 or is
        (close to) singular
    """

    def __init__(self, m):
        m = require_finite("m", m)
        if m.shape != (3, 3):
            msg = "Distortion matrix must be 3x3, got shape {shape}".format(
                shape=m.shape
            )
            raise InvalidParameterError(msg)
        det = np.linalg.det(m)
        if abs(det) <= MIN_DETERMINANT:
            msg = "Distortion matrix is singular: |det| = {det:g}".format(det=abs(det))
            raise InvalidParameterError(msg)
        self._m = m.copy()
        self._m.setflags(write=False)
        self._sf = None
        self._ma = None

    @property
    def m(self):
        """Read-only 3x3 array"""
        return self._m

    @property
    def sf(self):
        """Scale factor errors, diagonal of ``M - I``"""
        if self._sf is None:
            return np.diag(self._m) - 1.0
        return self._sf.copy()

    @property
    def ma(self):
        """Misalignment errors in order xy, xz, yx, yz, zx, zy"""
        if self._ma is None:
            return np.array([self._m[i, j] for i, j in MA_INDICES])
        return self._ma.copy()

    def decompose(self):
        """
        Splits matrix into scale factor and misalignment parts

        :return: tuple of scale factor 3-vector and misalignment 6-vector
        :rtype: tuple
        """
        return self.sf, self.ma

    def __eq__(self, other):
        if not isinstance(other, DistortionMatrix):
            return NotImplemented
        return np.array_equal(self._m, other._m)

    def __repr__(self):
        return "<{class_name} {m}>".format(
            class_name=self.__class__.__name__, m=self._m.tolist()
        )

    @classmethod
    def identity(cls):
        return compose_distortion((0.0, 0.0, 0.0), (0.0,) * 6)


def compose_distortion(sf, ma):
    """
    Builds distortion matrix ``I + diag(sf) + MA``

    :param sf: scale factor errors of x, y and z axes, unitless
    :param ma: six misalignment values placed row-major at xy, xz, yx, yz,
        zx, zy
    :raises InvalidParameterError: on non-finite or too large values
    :rtype: :class:`DistortionMatrix`
    """
    sf = require_finite("sf", sf)
    ma = require_finite("ma", ma)
    if sf.shape != (3,) or ma.shape != (6,):
        msg = "Expected 3 scale factors and 6 misalignments, got {sf} and {ma}".format(
            sf=sf.shape, ma=ma.shape
        )
        raise InvalidParameterError(msg)
    if np.any(np.abs(sf) >= MAX_DISTORTION) or np.any(np.abs(ma) >= MAX_DISTORTION):
        msg = "Scale factors and misalignments must be below {limit} in magnitude".format(
            limit=MAX_DISTORTION
        )
        raise InvalidParameterError(msg)
    m = np.eye(3)
    m[np.diag_indices(3)] += sf
    for value, (i, j) in zip(ma, MA_INDICES):
        m[i, j] = value
    distortion = DistortionMatrix(m)
    distortion._sf = sf.copy()
    distortion._ma = ma.copy()
    return distortion


_ErrorModelParams = collections.namedtuple(
    "ErrorModelParams", ["distortion", "bias", "noise"]
)


class ErrorModelParams(_ErrorModelParams):
    """
    Complete parameters of the sensor model

    :ivar distortion: :class:`DistortionMatrix`
    :ivar bias: constant bias b_g, 3-vector in rad/s
    :ivar noise: :class:`~gyrocal.noise_sim.NoiseCoefficients`
    """

    __slots__ = ()

    @classmethod
    def create(cls, distortion=None, bias=(0.0, 0.0, 0.0), noise=None):
        from gyrocal.noise_sim import NoiseCoefficients

        if distortion is None:
            distortion = DistortionMatrix.identity()
        if noise is None:
            noise = NoiseCoefficients()
        bias = require_vector3("bias", bias)
        bias.setflags(write=False)
        return cls(distortion, bias, noise)


BiasResidual = collections.namedtuple("BiasResidual", ["delta_b"])


def _as_rates(name, value):
    array = np.asarray(value, dtype=np.float64)
    if array.ndim != 2 or array.shape[1] != 3:
        msg = "{name} must be a sequence of 3-vectors, got shape {shape}".format(
            name=name, shape=array.shape
        )
        raise DimensionError(msg)
    return array


def apply_error_model(true_rates, params, noise_realization):
    """
    Applies sensor model to true angular rates

    Per time step computes ``M . omega + b_g + w``.

    :param true_rates: Nx3 array of true rates in rad/s
    :param params: :class:`ErrorModelParams`
    :param noise_realization: Nx3 array of noise in rad/s
    :raises DimensionError: if lengths differ
    :return: Nx3 array of measured rates in rad/s
    :rtype: numpy.ndarray
    """
    omega = _as_rates("true_rates", true_rates)
    noise = _as_rates("noise_realization", noise_realization)
    if omega.shape != noise.shape:
        msg = "Length mismatch: {n_rates} rates vs {n_noise} noise samples".format(
            n_rates=len(omega), n_noise=len(noise)
        )
        raise DimensionError(msg)
    return omega @ params.distortion.m.T + params.bias + noise


def bias_residual(estimated, true_bias):
    """
    Bias error of an estimate, ``estimated - true_bias``

    :rtype: :class:`BiasResidual`
    """
    estimated = np.asarray(estimated, dtype=np.float64)
    true_bias = np.asarray(true_bias, dtype=np.float64)
    return BiasResidual(estimated - true_bias)
