# -*- coding: utf-8 -*-

"""
gyrocal.util
~~~~~~~~~~~~

Miscellaneous utility functions.
"""

import hashlib

import numpy as np

from gyrocal.exceptions import InvalidParameterError

#: Read buffer size for sha1sum
BUFFER_SIZE = 65536

#: Conversion factor from rad/s to mrad/s
MRAD = 1e3


def sha1sum(fileobj):
    """
    Computes SHA1 from file-like object

    It is up to caller to open file for reading and close it afterwards.

    :param fileobj: file-like object opened in binary mode
    :return: SHA1 digest as hexdecimal digits only
    :rtype: str
    """
    sha1 = hashlib.sha1()
    while True:
        data = fileobj.read(BUFFER_SIZE)
        if not data:
            break
        sha1.update(data)
    return sha1.hexdigest()


def sha1file(path):
    with open(path, "rb") as fileobj:
        return sha1sum(fileobj)


def sha1bytes(data):
    return hashlib.sha1(data).hexdigest()


def require_finite(name, value):
    """
    Converts value to float64 array and checks all entries are finite

    :param str name: parameter name used in error message
    :param value: scalar or array-like
    :raises InvalidParameterError: if any entry is NaN or infinite
    :rtype: numpy.ndarray
    """
    try:
        array = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError):
        msg = "Parameter {name} is not numeric: {value!r}".format(
            name=name, value=value
        )
        raise InvalidParameterError(msg)
    if not np.all(np.isfinite(array)):
        msg = "Parameter {name} must be finite, got {value!r}".format(
            name=name, value=value
        )
        raise InvalidParameterError(msg)
    return array


def require_vector3(name, value):
    array = require_finite(name, value)
    if array.shape != (3,):
        msg = "Parameter {name} must be a 3-vector, got shape {shape}".format(
            name=name, shape=array.shape
        )
        raise InvalidParameterError(msg)
    return array


def seed_sequence(seed, *keys):
    """
    Creates seed sequence for a sub-stream identified by keys

    Same seed with same keys always yields same stream, different keys yield
    statistically independent streams.

    :param seed: integer seed or :class:`numpy.random.SeedSequence`
    :param keys: non-negative integers identifying the sub-stream
    :rtype: numpy.random.SeedSequence
    """
    if isinstance(seed, np.random.SeedSequence):
        entropy = seed.entropy
        keys = tuple(seed.spawn_key) + tuple(keys)
    else:
        entropy = int(seed)
    return np.random.SeedSequence(entropy, spawn_key=tuple(int(k) for k in keys))


def make_rng(seed, *keys):
    return np.random.default_rng(seed_sequence(seed, *keys))
