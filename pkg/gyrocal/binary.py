# -*- coding: utf-8 -*-

"""
gyrocal.binary
~~~~~~~~~~~~~~

Versioned container of 64-bit float arrays

Layout, all integers little-endian::

    magic      8 bytes, identifies content (windows, labels, checkpoint)
    version    uint16
    count      uint32, number of arrays
    per array  uint8 ndim, ndim x uint64 dimensions
    data       raw float64 values of every array in row-major order
    checksum   20 bytes SHA1 of everything above
"""

import hashlib
import io
import logging
import struct

import numpy as np

from gyrocal.exceptions import FormatError

log = logging.getLogger(__name__)

#: Current format version
FORMAT_VERSION = 1

#: Magic of dataset windows, (N, 3, L) in (sample, axis, time) order
WINDOWS_MAGIC = b"GYROWIN\x00"

#: Magic of dataset labels, (N, 3)
LABELS_MAGIC = b"GYROLBL\x00"

#: Magic of network parameter checkpoints
CHECKPOINT_MAGIC = b"GYROCKP\x00"

#: Magic of resumable training state
STATE_MAGIC = b"GYROSTA\x00"

_HEADER = struct.Struct("<8sHI")
_DIGEST_SIZE = hashlib.sha1().digest_size


def encode_arrays(magic, arrays):
    """
    Serializes arrays into container bytes

    :param bytes magic: 8-byte content identifier
    :param arrays: sequence of array-likes convertible to float64
    :rtype: bytes
    """
    assert len(magic) == 8
    arrays = [np.ascontiguousarray(a, dtype="<f8") for a in arrays]
    body = io.BytesIO()
    body.write(_HEADER.pack(magic, FORMAT_VERSION, len(arrays)))
    for array in arrays:
        body.write(struct.pack("<B", array.ndim))
        body.write(struct.pack("<{n}Q".format(n=array.ndim), *array.shape))
    for array in arrays:
        body.write(array.tobytes(order="C"))
    payload = body.getvalue()
    return payload + hashlib.sha1(payload).digest()


def decode_arrays(data, magic):
    """
    Parses container bytes

    :param bytes data: container content
    :param bytes magic: expected content identifier
    :raises FormatError: on wrong magic, version, truncation or checksum
    :return: list of float64 arrays
    :rtype: list
    """
    if len(data) < _HEADER.size + _DIGEST_SIZE:
        raise FormatError("Container is truncated")
    payload, digest = data[:-_DIGEST_SIZE], data[-_DIGEST_SIZE:]
    if hashlib.sha1(payload).digest() != digest:
        raise FormatError("Container checksum mismatch")
    found_magic, version, count = _HEADER.unpack_from(payload, 0)
    if found_magic != magic:
        msg = "Unexpected container magic {found!r}, expected {magic!r}".format(
            found=found_magic, magic=magic
        )
        raise FormatError(msg)
    if version != FORMAT_VERSION:
        msg = "Unsupported container version {version}".format(version=version)
        raise FormatError(msg)
    offset = _HEADER.size
    shapes = []
    try:
        for _ in range(count):
            (ndim,) = struct.unpack_from("<B", payload, offset)
            offset += 1
            shape = struct.unpack_from("<{n}Q".format(n=ndim), payload, offset)
            offset += 8 * ndim
            shapes.append(shape)
    except struct.error:
        raise FormatError("Container header is truncated")
    arrays = []
    for shape in shapes:
        size = int(np.prod(shape, dtype=np.int64))
        if offset + 8 * size > len(payload):
            raise FormatError("Container data is truncated")
        array = np.frombuffer(payload, dtype="<f8", count=size, offset=offset)
        arrays.append(array.reshape(shape).astype(np.float64))
        offset += 8 * size
    if offset != len(payload):
        raise FormatError("Container has trailing data")
    return arrays


def write_arrays(path, magic, arrays):
    data = encode_arrays(magic, arrays)
    with open(path, "wb") as fileobj:
        fileobj.write(data)
    log.debug("Wrote %d arrays (%d bytes) to %s", len(arrays), len(data), path)


def read_arrays(path, magic):
    try:
        with open(path, "rb") as fileobj:
            data = fileobj.read()
    except IOError as err:
        raise FormatError("Can't read {path}: {err}".format(path=path, err=err))
    return decode_arrays(data, magic)
