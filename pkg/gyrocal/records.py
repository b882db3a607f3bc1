# -*- coding: utf-8 -*-

"""
gyrocal.records
~~~~~~~~~~~~~~~

Timestamped three-axis angular rate recordings and their CSV form

Signal CSV has header ``time_s,gyro_x,gyro_y,gyro_z``, one sample per row, in
rad/s. Lines starting with ``#`` before the header carry provenance comments
(config hash, seed). Metadata such as the true bias of synthetic records is
stored in a ``.meta`` sidecar.
"""

import logging

import numpy as np
import pandas as pd

from gyrocal.exceptions import InvalidParameterError
from gyrocal.meta import write_metadata

log = logging.getLogger(__name__)

#: Columns of the signal CSV
CSV_COLUMNS = ("time_s", "gyro_x", "gyro_y", "gyro_z")


class SignalRecord(object):
    """
    Three-axis angular rate recording

    :param float fs: sample rate in Hz
    :param samples: Nx3 array of rates in rad/s
    :param true_bias: (optional) known bias, 3-vector in rad/s
    :param str source_id: identifier of the recording
    :param int seed: seed the record was generated with, None for real data
    :param dict extra: (optional) other provenance, e.g. known turntable rate
    """

    def __init__(
        self, fs, samples, true_bias=None, source_id="record", seed=None, extra=None
    ):
        if not fs > 0:
            msg = "Sample rate must be positive, got {fs}".format(fs=fs)
            raise InvalidParameterError(msg)
        samples = np.asarray(samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[1] != 3:
            msg = "Samples must be Nx3, got shape {shape}".format(shape=samples.shape)
            raise InvalidParameterError(msg)
        self.fs = float(fs)
        self.samples = samples
        self.true_bias = (
            None if true_bias is None else np.asarray(true_bias, dtype=np.float64)
        )
        self.source_id = source_id
        self.seed = seed
        self.extra = dict(extra or {})

    @property
    def duration(self):
        """Duration in seconds"""
        return len(self.samples) / self.fs

    @property
    def times(self):
        return np.arange(len(self.samples)) / self.fs

    def __len__(self):
        return len(self.samples)

    def axis(self, axis):
        """
        Returns samples of a single axis

        :param axis: either name (x, y, z) or index
        :rtype: numpy.ndarray
        """
        if axis in ("x", "y", "z"):
            axis = "xyz".index(axis)
        if axis not in (0, 1, 2):
            raise InvalidParameterError("Unknown axis {axis!r}".format(axis=axis))
        return self.samples[:, axis]

    def windows(self):
        """Samples in (axis, time) layout, 3xN"""
        return np.ascontiguousarray(self.samples.T)

    def metadata(self):
        """Key-value provenance of the record suitable for sidecar"""
        meta = {"source_id": self.source_id, "fs": self.fs, "n_samples": len(self)}
        if self.seed is not None:
            meta["seed"] = int(self.seed)
        if self.true_bias is not None:
            meta["true_bias"] = [float(value) for value in self.true_bias]
        meta.update(self.extra)
        return meta

    def __repr__(self):
        return "<{class_name} [{source_id}, {n} samples @ {fs:g} Hz]>".format(
            class_name=self.__class__.__name__,
            source_id=self.source_id,
            n=len(self),
            fs=self.fs,
        )


def write_signal_csv(record, path, comments=None):
    """
    Writes record to signal CSV with sidecar metadata

    Floats are written in shortest round-trip form so that reading the file
    back gives bit-identical samples.

    :param record: :class:`SignalRecord`
    :param str path: target CSV path
    :param dict comments: (optional) key-value pairs written as ``#`` lines
    :return: path of written sidecar
    :rtype: str
    """
    frame = pd.DataFrame(
        {
            "time_s": record.times,
            "gyro_x": record.samples[:, 0],
            "gyro_y": record.samples[:, 1],
            "gyro_z": record.samples[:, 2],
        },
        columns=list(CSV_COLUMNS),
    )
    with open(path, "w", newline="") as fileobj:
        for key in sorted(comments or {}):
            fileobj.write("# {key}={value}\n".format(key=key, value=comments[key]))
        frame.to_csv(fileobj, index=False, lineterminator="\n")
    meta = dict(comments or {})
    meta.update(record.metadata())
    log.debug("Wrote %d samples to %s", len(record), path)
    return write_metadata(path, meta)
