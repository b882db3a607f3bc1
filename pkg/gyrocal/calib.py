# -*- coding: utf-8 -*-

"""
gyrocal.calib
~~~~~~~~~~~~~

Deterministic calibration of distortion matrix and bias

A measurement at known rate ``omega`` with time-averaged output ``y``
contributes three rows to the linear system ``A x = y``::

    | omega^T    0        0      1 0 0 |   | m_x |
    |   0      omega^T    0      0 1 0 | . | m_y |  = y
    |   0        0      omega^T  0 0 1 |   | m_z |
                                           |  b  |

where ``m_x``, ``m_y``, ``m_z`` are rows of the distortion matrix and ``b``
is the bias. The system is solved by QR-based least squares.
"""

import collections
import logging

import numpy as np
import scipy.linalg
import yaml

from gyrocal.error_model import AXES, DistortionMatrix
from gyrocal.exceptions import InvalidParameterError, RankDeficientError
from gyrocal.util import require_finite, require_vector3

log = logging.getLogger(__name__)

#: Number of unknowns: nine matrix entries and three biases
N_PARAMS = 12

#: Names of unknowns in solution vector order
PARAM_NAMES = tuple("m_" + row + col for row in AXES for col in AXES) + tuple(
    "b_" + axis for axis in AXES
)

#: Condition number above which a warning is logged
CONDITION_WARNING = 1e6

#: Singular values below this fraction of the largest are treated as zero
RANK_TOLERANCE = 1e-10


_CalibrationMeasurement = collections.namedtuple(
    "CalibrationMeasurement", ["known_rate", "measured_mean", "averaging_time"]
)


class CalibrationMeasurement(_CalibrationMeasurement):
    """
    Time-averaged output of the sensor at known input rate

    :ivar known_rate: turntable reference rate, 3-vector in rad/s
    :ivar measured_mean: averaged sensor output, 3-vector in rad/s
    :ivar averaging_time: averaging time in s
    """

    __slots__ = ()

    def __new__(cls, known_rate, measured_mean, averaging_time):
        known_rate = require_vector3("known_rate", known_rate)
        measured_mean = require_vector3("measured_mean", measured_mean)
        if not averaging_time > 0:
            msg = "Averaging time must be positive, got {t}".format(t=averaging_time)
            raise InvalidParameterError(msg)
        return super(CalibrationMeasurement, cls).__new__(
            cls, known_rate, measured_mean, float(averaging_time)
        )


class CalibrationParams(
    collections.namedtuple("CalibrationParams", ["m_vec", "bias"])
):
    """
    Solution of the calibration system

    :ivar m_vec: rows of distortion matrix stacked, 9-vector
    :ivar bias: bias, 3-vector in rad/s
    """

    __slots__ = ()

    @classmethod
    def from_vector(cls, x):
        x = np.asarray(x, dtype=np.float64)
        return cls(x[:9].copy(), x[9:].copy())

    @property
    def vector(self):
        return np.concatenate((self.m_vec, self.bias))

    @property
    def matrix(self):
        return self.m_vec.reshape(3, 3)

    @property
    def distortion(self):
        """
        :raises InvalidParameterError: if solved matrix is singular
        :rtype: :class:`~gyrocal.error_model.DistortionMatrix`
        """
        return DistortionMatrix(self.matrix)

    def apply_inverse(self, samples):
        """
        Corrects raw samples, ``M^-1 (samples - b)``

        :param samples: Nx3 array of raw rates in rad/s
        :return: Nx3 array of corrected rates in rad/s
        :rtype: numpy.ndarray
        """
        samples = np.asarray(samples, dtype=np.float64)
        return np.linalg.solve(self.matrix, (samples - self.bias).T).T


LinearSystem = collections.namedtuple("LinearSystem", ["a", "y"])

CalibrationResult = collections.namedtuple(
    "CalibrationResult", ["params", "residual_norm", "condition", "rank"]
)


def measurement_from_record(record, known_rate):
    """
    Averages a recording taken at known rate

    :param record: :class:`~gyrocal.records.SignalRecord`
    :rtype: :class:`CalibrationMeasurement`
    """
    return CalibrationMeasurement(
        known_rate, record.samples.mean(axis=0), record.duration
    )


def six_point_protocol(rate_magnitude):
    """
    Turntable rates of six-point protocol plus a stationary point

    Each sensitive axis is turned clockwise and counter clockwise.

    :param float rate_magnitude: turn rate in rad/s
    :raises InvalidParameterError: if magnitude isn't positive
    :return: seven 3-vectors: +x, -x, +y, -y, +z, -z, zero
    :rtype: list
    """
    rate_magnitude = float(require_finite("rate_magnitude", rate_magnitude))
    if not rate_magnitude > 0:
        msg = "Rate magnitude must be positive, got {rate}".format(rate=rate_magnitude)
        raise InvalidParameterError(msg)
    rates = []
    for axis in range(3):
        for sign in (1.0, -1.0):
            rate = np.zeros(3)
            rate[axis] = sign * rate_magnitude
            rates.append(rate)
    rates.append(np.zeros(3))
    return rates


def assemble_system(measurements):
    """
    Stacks 3x12 blocks of all measurements

    :param measurements: list of :class:`CalibrationMeasurement`
    :raises InvalidParameterError: if list is empty
    :return: (3k)x12 matrix and 3k right hand side
    :rtype: :class:`LinearSystem`
    """
    measurements = list(measurements)
    if not measurements:
        raise InvalidParameterError("At least one measurement is required")
    a = np.zeros((3 * len(measurements), N_PARAMS))
    y = np.empty(3 * len(measurements))
    for index, measurement in enumerate(measurements):
        for axis in range(3):
            row = 3 * index + axis
            a[row, 3 * axis : 3 * axis + 3] = measurement.known_rate
            a[row, 9 + axis] = 1.0
            y[row] = measurement.measured_mean[axis]
    return LinearSystem(a, y)


def _unobservable(a):
    _, singular, vt = np.linalg.svd(a)
    tolerance = RANK_TOLERANCE * max(singular[0], 1.0)
    rank = int(np.sum(singular > tolerance))
    null_space = vt[rank:]
    weights = np.sqrt(np.sum(null_space**2, axis=0))
    names = tuple(name for name, w in zip(PARAM_NAMES, weights) if w > 1e-8)
    return rank, names


def solve_calibration(system):
    """
    Least-squares solution of the calibration system

    :param system: :class:`LinearSystem` from :py:func:`assemble_system`
    :raises RankDeficientError: if numerical rank is below 12. The exception
        names unobservable parameters and carries minimum-norm `partial`
        solution in which observable parameters are determined.
    :rtype: :class:`CalibrationResult`
    """
    a = np.asarray(system.a, dtype=np.float64)
    y = np.asarray(system.y, dtype=np.float64)
    rank, unobservable = _unobservable(a)
    if rank < N_PARAMS:
        observable = [name not in unobservable for name in PARAM_NAMES]
        x = np.zeros(N_PARAMS)
        x[observable], _, _, _ = np.linalg.lstsq(a[:, observable], y, rcond=None)
        partial = CalibrationParams.from_vector(x)
        msg = "Calibration system has rank {rank} < {n}, unobservable: {names}".format(
            rank=rank, n=N_PARAMS, names=", ".join(unobservable)
        )
        log.warning(msg)
        raise RankDeficientError(
            msg, unobservable=unobservable, partial=partial, rank=rank
        )
    q, r = scipy.linalg.qr(a, mode="economic")
    x = scipy.linalg.solve_triangular(r, q.T @ y)
    residual_norm = float(np.linalg.norm(a @ x - y))
    condition = float(np.linalg.cond(a))
    if condition > CONDITION_WARNING:
        log.warning("Calibration system is ill-conditioned: cond = %g", condition)
    log.debug(
        "Solved %d rows, residual norm %g, condition %g",
        len(y),
        residual_norm,
        condition,
    )
    return CalibrationResult(
        CalibrationParams.from_vector(x), residual_norm, condition, rank
    )


def calibrate(measurements):
    """Assembles and solves system from measurements"""
    return solve_calibration(assemble_system(measurements))


def report_dict(result, unobservable=(), comments=None):
    """
    Structured calibration report

    :param result: :class:`CalibrationResult` or partial
        :class:`CalibrationParams`
    :rtype: dict
    """
    if isinstance(result, CalibrationParams):
        params, residual_norm, condition, rank = result, None, None, None
    else:
        params, residual_norm, condition, rank = result
    report = {
        "matrix": [[float(v) for v in row] for row in params.matrix],
        "bias": [float(v) for v in params.bias],
        "residual_norm": residual_norm,
        "condition": condition,
        "rank": rank,
        "unobservable": list(unobservable),
    }
    if unobservable:
        report["matrix"] = None
    report.update(comments or {})
    return report


def write_report(path, report):
    with open(path, "w") as fileobj:
        yaml.safe_dump(report, fileobj, default_flow_style=None, sort_keys=True)
