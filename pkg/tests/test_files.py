# -*- coding: utf-8 -*-

"""Tests for `gyrocal.binary`, `gyrocal.meta` and `gyrocal.records` modules."""

import io
import os
import shutil
import tempfile
import unittest

import numpy as np

from gyrocal import binary
from gyrocal.dataset import ingest_csv, load_record
from gyrocal.exceptions import FormatError, InvalidParameterError
from gyrocal.meta import Metadata, read_metadata, sidecar_path, write_metadata
from gyrocal.records import SignalRecord, write_signal_csv


class TempDirMixin(object):
    def setUp(self):
        self.directory = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.directory)

    def path(self, name):
        return os.path.join(self.directory, name)


class TestBinary(TempDirMixin, unittest.TestCase):
    """Tests for `gyrocal.binary` module."""

    def test_layout(self):
        data = binary.encode_arrays(binary.LABELS_MAGIC, [np.array([[1.0, 2.0]])])
        assert data[:8] == b"GYROLBL\x00"
        assert data[8:10] == b"\x01\x00"
        assert data[10:14] == b"\x01\x00\x00\x00"
        assert data[14:15] == b"\x02"
        assert len(data) == 14 + 1 + 16 + 16 + 20

    def test_values_exact(self):
        arrays = [np.random.default_rng(0).normal(size=(4, 3, 5)), np.arange(3.0)]
        path = self.path("a.bin")
        binary.write_arrays(path, binary.WINDOWS_MAGIC, arrays)
        loaded = binary.read_arrays(path, binary.WINDOWS_MAGIC)
        for original, copy in zip(arrays, loaded):
            assert original.tobytes() == copy.tobytes()
            assert original.shape == copy.shape

    def test_wrong_magic(self):
        data = binary.encode_arrays(binary.WINDOWS_MAGIC, [np.zeros(2)])
        with self.assertRaises(FormatError):
            binary.decode_arrays(data, binary.CHECKPOINT_MAGIC)

    def test_corrupt(self):
        data = bytearray(binary.encode_arrays(binary.WINDOWS_MAGIC, [np.zeros(2)]))
        data[20] ^= 0xFF
        with self.assertRaises(FormatError):
            binary.decode_arrays(bytes(data), binary.WINDOWS_MAGIC)

    def test_truncated(self):
        data = binary.encode_arrays(binary.WINDOWS_MAGIC, [np.zeros(2)])
        with self.assertRaises(FormatError):
            binary.decode_arrays(data[:10], binary.WINDOWS_MAGIC)

    def test_missing_file(self):
        with self.assertRaises(FormatError):
            binary.read_arrays(self.path("missing.bin"), binary.WINDOWS_MAGIC)


class TestMetadata(TempDirMixin, unittest.TestCase):
    """Tests for `gyrocal.meta` module."""

    def test_sidecar_path(self):
        assert sidecar_path("/data/s00r01.csv") == "/data/s00r01.meta"

    def test_write_and_read(self):
        path = self.path("signal.csv")
        write_metadata(path, {"b": [1.0, 2.0], "a": "x"})
        with open(self.path("signal.meta")) as fileobj:
            assert fileobj.read() == "a: x\nb: [1.0, 2.0]\n"
        meta = read_metadata(path)
        assert dict(meta) == {"a": "x", "b": [1.0, 2.0]}
        assert len(meta) == 2

    def test_raise_for_keys(self):
        path = self.path("signal.csv")
        write_metadata(path, {"a": 1})
        meta = read_metadata(path)
        meta.raise_for_keys("a")
        with self.assertRaises(FormatError):
            meta.raise_for_keys("a", "true_bias")

    def test_missing(self):
        with self.assertRaises(FormatError):
            read_metadata(self.path("nothing.csv"))

    def test_not_a_mapping(self):
        path = self.path("list.meta")
        with open(path, "w") as fileobj:
            fileobj.write("- 1\n- 2\n")
        with self.assertRaises(FormatError):
            Metadata(path).data


class TestSignalRecord(TempDirMixin, unittest.TestCase):
    """Tests for `gyrocal.records` module."""

    def test_invalid(self):
        with self.assertRaises(InvalidParameterError):
            SignalRecord(0.0, np.zeros((3, 3)))
        with self.assertRaises(InvalidParameterError):
            SignalRecord(100.0, np.zeros((3, 2)))

    def test_layout(self):
        samples = np.arange(12.0).reshape(4, 3)
        record = SignalRecord(2.0, samples)
        assert record.duration == 2.0
        np.testing.assert_array_equal(record.times, [0.0, 0.5, 1.0, 1.5])
        np.testing.assert_array_equal(record.windows()[1], samples[:, 1])
        np.testing.assert_array_equal(record.axis("z"), samples[:, 2])

    def test_csv_format(self):
        record = SignalRecord(
            10.0, [[0.1, 0.2, 0.3], [0.4, 0.5, 0.6]], true_bias=(0.1, 0.2, 0.3)
        )
        path = self.path("rec.csv")
        write_signal_csv(record, path, {"config_hash": "f00"})
        with open(path, "rb") as fileobj:
            content = fileobj.read()
        assert content.startswith(b"# config_hash=f00\ntime_s,gyro_x,gyro_y,gyro_z\n")
        assert b"\r\n" not in content
        meta = read_metadata(path)
        assert meta["true_bias"] == [0.1, 0.2, 0.3]
        assert meta["config_hash"] == "f00"

    def test_csv_bit_exact(self):
        samples = np.random.default_rng(5).normal(scale=0.01, size=(300, 3))
        record = SignalRecord(200.0, samples, true_bias=(0.0, 0.1, 0.2), source_id="r1")
        path = self.path("exact.csv")
        write_signal_csv(record, path)
        loaded = load_record(path)
        assert loaded.samples.tobytes() == samples.tobytes()
        assert loaded.fs == 200.0
        assert loaded.source_id == "r1"
        np.testing.assert_array_equal(loaded.true_bias, (0.0, 0.1, 0.2))


class TestIngestCsv(unittest.TestCase):
    """Tests for ingest_csv() from `gyrocal.dataset` module."""

    def test_missing_column(self):
        stream = io.StringIO("time_s,gyro_x,gyro_y\n0,1,2\n0.1,1,2\n")
        with self.assertRaises(FormatError) as context:
            ingest_csv(stream)
        assert context.exception.row == 0

    def test_non_monotone(self):
        stream = io.StringIO(
            "time_s,gyro_x,gyro_y,gyro_z\n0,1,2,3\n0.1,1,2,3\n0.1,1,2,3\n"
        )
        with self.assertRaises(FormatError) as context:
            ingest_csv(stream)
        assert context.exception.row == 2

    def test_jitter(self):
        stream = io.StringIO(
            "time_s,gyro_x,gyro_y,gyro_z\n0,1,2,3\n0.1,1,2,3\n0.2,1,2,3\n0.35,1,2,3\n"
        )
        with self.assertRaises(FormatError) as context:
            ingest_csv(stream)
        assert context.exception.row == 3

    def test_non_numeric(self):
        stream = io.StringIO("time_s,gyro_x,gyro_y,gyro_z\n0,1,2,3\n0.1,a,2,3\n")
        with self.assertRaises(FormatError):
            ingest_csv(stream)

    def test_empty(self):
        with self.assertRaises(FormatError):
            ingest_csv(io.StringIO(""))

    def test_comments_and_rate(self):
        stream = io.StringIO(
            "# seed=1\ntime_s,gyro_x,gyro_y,gyro_z\n0,1,2,3\n0.01,4,5,6\n0.02,7,8,9\n"
        )
        record = ingest_csv(stream, source_id="mem")
        assert record.fs == 100.0
        assert record.source_id == "mem"
        np.testing.assert_array_equal(record.samples[2], [7, 8, 9])
