# -*- coding: utf-8 -*-

"""
gyrocal.dataset
~~~~~~~~~~~~~~~

Dataset generation from stationary recordings

Every full-length recording is

#. labelled with its per-axis mean (the long-averaging ground truth),
#. truncated by division factor K into K disjoint windows of T = duration/K
   seconds,
#. copied and augmented with additive Gaussian bias and white noise; the
   injected bias shifts the label, the zero-mean noise doesn't,
#. assigned to train or test partition by source, so that no recording
   contributes to both partitions.
"""

import collections
import logging
import math
import os

import numpy as np
import pandas as pd
import yaml

from gyrocal import binary
from gyrocal.allan import allan_deviation, fit_noise_coefficients
from gyrocal.exceptions import (
    FormatError,
    GyrocalException,
    InvalidParameterError,
    PartitionError,
    SplitError,
)
from gyrocal.meta import read_metadata, sidecar_path
from gyrocal.records import CSV_COLUMNS, SignalRecord
from gyrocal.util import make_rng, seed_sequence, sha1bytes, sha1file

log = logging.getLogger(__name__)

#: Allowed relative deviation of time steps from their median
MAX_JITTER = 0.01

#: Partition tags
TRAIN = "train"
TEST = "test"

#: File names inside a dataset directory
MANIFEST_NAME = "manifest.yaml"
WINDOWS_NAME = "windows.bin"
LABELS_NAME = "labels.bin"

LabeledSample = collections.namedtuple(
    "LabeledSample", ["window", "label", "origin", "augmentation_id", "delta"]
)
LabeledSample.__new__.__defaults__ = (0, None)
LabeledSample.__doc__ = """
Window paired with its bias label

:ivar window: 3xL array in rad/s
:ivar label: 3-vector in rad/s
:ivar origin: source record id
:ivar augmentation_id: 0 for original window, copy number otherwise
:ivar delta: injected bias offset, 3-vector in rad/s
"""


def ingest_csv(stream, source_id=None):
    """
    Reads signal CSV

    :param stream: path or text file-like object with columns time_s,
        gyro_x, gyro_y, gyro_z. Lines starting with ``#`` are skipped.
    :param str source_id: (optional) id of created record, by default
        basename of path
    :raises FormatError: on missing columns, empty file, non-monotone time or
        time steps deviating more than 1 % from uniform
    :rtype: :class:`~gyrocal.records.SignalRecord`
    """
    try:
        frame = pd.read_csv(stream, comment="#", float_precision="round_trip")
    except pd.errors.EmptyDataError:
        raise FormatError("Signal file is empty", row=0)
    except (pd.errors.ParserError, ValueError) as err:
        raise FormatError("Failed to parse signal file: {err}".format(err=err))
    missing = [column for column in CSV_COLUMNS if column not in frame.columns]
    if missing:
        msg = "Signal file misses columns: {missing}".format(missing=", ".join(missing))
        raise FormatError(msg, row=0)
    if len(frame) < 2:
        raise FormatError("Signal file needs at least two samples", row=len(frame))
    try:
        values = frame[list(CSV_COLUMNS)].to_numpy(dtype=np.float64)
    except ValueError as err:
        raise FormatError("Non-numeric value in signal file: {err}".format(err=err))
    bad_rows = np.flatnonzero(~np.all(np.isfinite(values), axis=1))
    if len(bad_rows):
        row = int(bad_rows[0])
        raise FormatError("Non-finite value at row {row}".format(row=row), row=row)
    steps = np.diff(values[:, 0])
    non_monotone = np.flatnonzero(steps <= 0)
    if len(non_monotone):
        row = int(non_monotone[0]) + 1
        msg = "Time is not increasing at row {row}".format(row=row)
        raise FormatError(msg, row=row)
    median = float(np.median(steps))
    jitter = np.flatnonzero(np.abs(steps - median) > MAX_JITTER * median)
    if len(jitter):
        row = int(jitter[0]) + 1
        msg = "Time step at row {row} deviates more than {pct:g} % from {dt:g} s".format(
            row=row, pct=100 * MAX_JITTER, dt=median
        )
        raise FormatError(msg, row=row)
    fs = 1.0 / median
    if abs(fs - round(fs)) < 1e-6 * fs:
        fs = float(round(fs))
    if source_id is None:
        name = getattr(stream, "name", stream)
        source_id = (
            os.path.splitext(os.path.basename(name))[0]
            if isinstance(name, str)
            else "record"
        )
    log.debug("Ingested %d samples at %g Hz as %s", len(values), fs, source_id)
    return SignalRecord(fs, values[:, 1:], source_id=source_id)


def load_record(path):
    """
    Reads signal CSV together with its sidecar, if present

    Sidecar supplies source id, seed, true bias and other provenance.

    :rtype: :class:`~gyrocal.records.SignalRecord`
    """
    if not os.path.exists(str(path)):
        raise FormatError("Signal file {path} doesn't exist".format(path=path))
    record = ingest_csv(str(path))
    if os.path.exists(sidecar_path(path)):
        meta = dict(read_metadata(path))
        record.source_id = meta.pop("source_id", record.source_id)
        record.seed = meta.pop("seed", None)
        true_bias = meta.pop("true_bias", None)
        if true_bias is not None:
            record.true_bias = np.asarray(true_bias, dtype=np.float64)
        for key in ("fs", "n_samples"):
            meta.pop(key, None)
        record.extra.update(meta)
    return record


def truncate(record, k):
    """
    Divides record into K contiguous disjoint windows

    :param record: :class:`~gyrocal.records.SignalRecord`
    :param int k: division factor
    :raises PartitionError: if K doesn't divide number of samples
    :return: Kx3xL array, windows in temporal order
    :rtype: numpy.ndarray
    """
    n_samples = len(record)
    if int(k) != k or k < 1 or n_samples % int(k):
        msg = "Division factor {k} doesn't divide {n} samples of {source}".format(
            k=k, n=n_samples, source=record.source_id
        )
        raise PartitionError(msg)
    k = int(k)
    length = n_samples // k
    return np.ascontiguousarray(record.samples.reshape(k, length, 3).transpose(0, 2, 1))


def make_label(record):
    """
    Long-averaging ground truth of a record, per-axis mean of all samples

    :rtype: numpy.ndarray
    """
    return record.samples.mean(axis=0)


def augment(sample, n_copies, bias_sigma, noise_sigma, seed):
    """
    Creates augmented copies of a sample

    Each copy gets an independent per-axis bias offset drawn from
    N(0, bias_sigma^2) added to all samples and to the label, plus white
    noise N(0, noise_sigma^2) which leaves the label as is.

    :param sample: :class:`LabeledSample`
    :param int n_copies: number of copies
    :param float bias_sigma: standard deviation of bias offset in rad/s
    :param float noise_sigma: standard deviation of white noise in rad/s
    :param seed: integer or :class:`numpy.random.SeedSequence`
    :rtype: list
    """
    if bias_sigma < 0 or noise_sigma < 0:
        raise InvalidParameterError("Augmentation sigmas must be non-negative")
    rng = make_rng(seed)
    window = np.asarray(sample.window, dtype=np.float64)
    label = np.asarray(sample.label, dtype=np.float64)
    base_delta = np.zeros(3) if sample.delta is None else sample.delta
    copies = []
    for copy in range(int(n_copies)):
        delta = rng.normal(0.0, bias_sigma, 3) if bias_sigma > 0 else np.zeros(3)
        noisy = window + delta[:, np.newaxis]
        if noise_sigma > 0:
            noisy = noisy + rng.normal(0.0, noise_sigma, window.shape)
        copies.append(
            LabeledSample(
                noisy, label + delta, sample.origin, copy + 1, base_delta + delta
            )
        )
    return copies


class LabeledDataset(object):
    """
    Windows with bias labels, partitioned into train and test by source

    :param windows: Nx3xL array in rad/s
    :param labels: Nx3 array in rad/s
    :param origins: N source ids
    :param augmentation_ids: N copy numbers
    :param deltas: Nx3 injected bias offsets
    :param tags: N partition tags, or None before split
    :param int k: division factor
    :param float fs: sample rate in Hz
    :param dict info: provenance written to manifest
    """

    def __init__(
        self,
        windows,
        labels,
        origins,
        augmentation_ids=None,
        deltas=None,
        tags=None,
        k=1,
        fs=200.0,
        info=None,
    ):
        windows = np.asarray(windows, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.float64)
        if windows.ndim != 3 or windows.shape[1] != 3:
            msg = "Windows must be Nx3xL, got shape {shape}".format(shape=windows.shape)
            raise InvalidParameterError(msg)
        n_samples = len(windows)
        if labels.shape != (n_samples, 3) or len(origins) != n_samples:
            raise InvalidParameterError("Windows, labels and origins lengths differ")
        self.windows = windows
        self.labels = labels
        self.origins = list(origins)
        self.augmentation_ids = (
            np.zeros(n_samples, dtype=int)
            if augmentation_ids is None
            else np.asarray(augmentation_ids, dtype=int)
        )
        self.deltas = np.zeros((n_samples, 3)) if deltas is None else np.asarray(deltas)
        self.tags = None if tags is None else list(tags)
        self.k = int(k)
        self.fs = float(fs)
        self.info = dict(info or {})

    @classmethod
    def from_samples(cls, samples, **kwargs):
        samples = list(samples)
        if not samples:
            raise InvalidParameterError("Dataset needs at least one sample")
        lengths = set(np.shape(sample.window) for sample in samples)
        if len(lengths) != 1:
            msg = "All windows must have equal shape, got {shapes}".format(
                shapes=sorted(lengths)
            )
            raise InvalidParameterError(msg)
        return cls(
            np.stack([sample.window for sample in samples]),
            np.stack([sample.label for sample in samples]),
            [sample.origin for sample in samples],
            [sample.augmentation_id for sample in samples],
            np.stack(
                [
                    np.zeros(3) if sample.delta is None else sample.delta
                    for sample in samples
                ]
            ),
            **kwargs
        )

    def __len__(self):
        return len(self.windows)

    @property
    def window_length(self):
        return self.windows.shape[2]

    @property
    def window_seconds(self):
        return self.window_length / self.fs

    @property
    def sources(self):
        """Distinct source ids in order of first appearance"""
        return list(collections.OrderedDict.fromkeys(self.origins))

    def sample(self, index):
        """:rtype: :class:`LabeledSample`"""
        return LabeledSample(
            self.windows[index],
            self.labels[index],
            self.origins[index],
            int(self.augmentation_ids[index]),
            self.deltas[index],
        )

    @property
    def samples(self):
        return [self.sample(index) for index in range(len(self))]

    def source_tags(self):
        """Partition of every source, dict"""
        if self.tags is None:
            return {}
        return dict(zip(self.origins, self.tags))

    def select(self, mask, tags=None):
        """
        Subset of samples selected by boolean mask

        :rtype: :class:`LabeledDataset`
        """
        mask = np.asarray(mask, dtype=bool)
        indices = np.flatnonzero(mask)
        if tags is None and self.tags is not None:
            tags = [self.tags[i] for i in indices]
        return LabeledDataset(
            self.windows[indices],
            self.labels[indices],
            [self.origins[i] for i in indices],
            self.augmentation_ids[indices],
            self.deltas[indices],
            tags,
            self.k,
            self.fs,
            self.info,
        )

    def by_sources(self, sources):
        sources = set(sources)
        return self.select([origin in sources for origin in self.origins])

    def partition(self, tag):
        """Samples tagged `tag`"""
        if self.tags is None:
            raise SplitError("Dataset hasn't been split yet")
        return self.select([t == tag for t in self.tags])

    @property
    def train(self):
        return self.partition(TRAIN)

    @property
    def test(self):
        return self.partition(TEST)

    def __repr__(self):
        return "<{class_name} [K={k}, {n} samples of {length}]>".format(
            class_name=self.__class__.__name__,
            k=self.k,
            n=len(self),
            length=self.window_length,
        )


def partition_sources(sources, ratio, seed):
    """
    Assigns sources to first partition with given ratio

    :return: tuple of first and second partition source lists
    :rtype: tuple
    """
    sources = sorted(set(sources))
    if len(sources) < 2:
        msg = "At least two distinct sources are needed, got {n}".format(
            n=len(sources)
        )
        raise SplitError(msg)
    n_first = int(round(ratio * len(sources)))
    n_first = min(max(n_first, 1), len(sources) - 1)
    order = make_rng(seed).permutation(len(sources))
    first = sorted(sources[i] for i in order[:n_first])
    second = sorted(sources[i] for i in order[n_first:])
    return first, second


def split(dataset, ratio=0.8, seed=0):
    """
    Tags samples as train or test by their source record

    All windows and augmented copies of a source share its partition.

    :param dataset: :class:`LabeledDataset`
    :param float ratio: fraction of sources in train partition
    :param int seed: seed of assignment
    :raises SplitError: if dataset has less than two sources
    :rtype: :class:`LabeledDataset`
    """
    if not 0 < ratio < 1:
        raise InvalidParameterError("Split ratio must be in (0, 1)")
    train_sources, test_sources = partition_sources(dataset.origins, ratio, seed)
    train_set = set(train_sources)
    tags = [TRAIN if origin in train_set else TEST for origin in dataset.origins]
    log.info(
        "Split %d sources into %d train and %d test",
        len(train_sources) + len(test_sources),
        len(train_sources),
        len(test_sources),
    )
    result = dataset.select(np.ones(len(dataset), dtype=bool), tags=tags)
    result.info["split"] = {"ratio": ratio, "seed": seed}
    return result


def estimate_noise_sigma(record):
    """
    Per-sample white noise sigma of a record from its Allan curve

    Falls back to sample standard deviation if no angular random walk region
    is identifiable.

    :rtype: float
    """
    sigmas = []
    for axis in ("x", "y", "z"):
        try:
            estimates = fit_noise_coefficients(allan_deviation(record, axis))
        except GyrocalException:
            estimates = None
        if estimates is not None and estimates.n is not None:
            sigmas.append(estimates.n.value * math.sqrt(record.fs))
        else:
            sigmas.append(float(np.std(record.axis(axis))))
    return float(np.mean(sigmas))


def build_dataset(
    records,
    k,
    n_copies=100,
    bias_sigma=0.01,
    noise_sigma=None,
    train_ratio=0.8,
    windows_per_copy=1,
    seed=0,
):
    """
    Generates labelled, augmented and split dataset

    :param records: full-length :class:`~gyrocal.records.SignalRecord` list
        sharing the same sample rate and length
    :param int k: division factor
    :param int n_copies: augmented copies per record, 0 keeps the original
        windows without augmentation
    :param float bias_sigma: sigma of additive bias in rad/s
    :param noise_sigma: sigma of additive white noise in rad/s, None to match
        each record's identified white noise
    :param float train_ratio: fraction of train sources
    :param windows_per_copy: windows drawn per copy from the K windows of the
        record, or ``"all"``
    :param int seed: seed of window selection, augmentation and split
    :rtype: :class:`LabeledDataset`
    """
    records = list(records)
    if not records:
        raise InvalidParameterError("No records to build dataset from")
    rates = set(record.fs for record in records)
    if len(rates) != 1:
        raise InvalidParameterError("Records have different sample rates")
    if windows_per_copy == "all":
        windows_per_copy = k
    windows_per_copy = int(windows_per_copy)
    if not 1 <= windows_per_copy <= k:
        msg = "Windows per copy must be in 1..{k}, got {n}".format(
            k=k, n=windows_per_copy
        )
        raise InvalidParameterError(msg)
    samples = []
    noise_sigmas = {}
    for index, record in enumerate(records):
        label = make_label(record)
        windows = truncate(record, k)
        sigma = noise_sigma
        if sigma is None:
            sigma = estimate_noise_sigma(record)
        noise_sigmas[record.source_id] = float(sigma)
        select_rng = make_rng(seed, index, 0)
        if n_copies == 0:
            chosen = np.sort(select_rng.choice(k, windows_per_copy, replace=False))
            samples.extend(
                LabeledSample(windows[j], label, record.source_id) for j in chosen
            )
            continue
        for copy in range(int(n_copies)):
            chosen = np.sort(select_rng.choice(k, windows_per_copy, replace=False))
            for j in chosen:
                base = LabeledSample(windows[j], label, record.source_id)
                (augmented,) = augment(
                    base, 1, bias_sigma, sigma, seed_sequence(seed, index, 1, copy, j)
                )
                samples.append(augmented._replace(augmentation_id=copy + 1))
        log.debug("Record %s produced %d samples", record.source_id, len(samples))
    info = {
        "augmentation": {
            "n_copies": int(n_copies),
            "bias_sigma": float(bias_sigma),
            "noise_sigma": noise_sigmas,
            "windows_per_copy": windows_per_copy,
            "seed": int(seed),
        },
        "source_checksums": {
            record.source_id: sha1bytes(record.samples.tobytes()) for record in records
        },
    }
    dataset = LabeledDataset.from_samples(samples, k=k, fs=records[0].fs, info=info)
    log.info("Built dataset %r from %d records", dataset, len(records))
    return split(dataset, train_ratio, seed)


def save_dataset(dataset, directory, comments=None):
    """
    Writes manifest and binary windows/labels into directory

    :return: path of manifest
    :rtype: str
    """
    if not os.path.isdir(directory):
        os.makedirs(directory)
    windows_path = os.path.join(directory, WINDOWS_NAME)
    labels_path = os.path.join(directory, LABELS_NAME)
    binary.write_arrays(windows_path, binary.WINDOWS_MAGIC, [dataset.windows])
    binary.write_arrays(
        labels_path, binary.LABELS_MAGIC, [dataset.labels, dataset.deltas]
    )
    source_tags = dataset.source_tags()
    sources = dataset.sources
    manifest = {
        "k": dataset.k,
        "fs": dataset.fs,
        "window_seconds": dataset.window_seconds,
        "window_length": dataset.window_length,
        "n_samples": len(dataset),
        "sources": [
            {
                "id": source,
                "split": source_tags.get(source),
                "checksum": dataset.info.get("source_checksums", {}).get(source),
            }
            for source in sources
        ],
        "sample_origins": [sources.index(origin) for origin in dataset.origins],
        "sample_augmentation_ids": [int(a) for a in dataset.augmentation_ids],
        "files": {
            WINDOWS_NAME: sha1file(windows_path),
            LABELS_NAME: sha1file(labels_path),
        },
    }
    for key, value in dataset.info.items():
        if key != "source_checksums":
            manifest[key] = value
    manifest.update(comments or {})
    path = os.path.join(directory, MANIFEST_NAME)
    with open(path, "w") as fileobj:
        yaml.safe_dump(manifest, fileobj, default_flow_style=None, sort_keys=True)
    log.info("Saved %r to %s", dataset, directory)
    return path


def read_manifest(directory):
    path = os.path.join(directory, MANIFEST_NAME)
    if not os.path.exists(path):
        raise FormatError("Dataset manifest {path} doesn't exist".format(path=path))
    with open(path) as fileobj:
        try:
            return yaml.safe_load(fileobj)
        except yaml.YAMLError as err:
            msg = "Failed to parse {path}: {err}".format(path=path, err=err)
            raise FormatError(msg)


def load_dataset(directory):
    """
    Reads dataset written by :py:func:`save_dataset`

    :raises FormatError: on missing files or checksum mismatch
    :rtype: :class:`LabeledDataset`
    """
    manifest = read_manifest(directory)
    for name, checksum in manifest["files"].items():
        path = os.path.join(directory, name)
        if not os.path.exists(path) or sha1file(path) != checksum:
            msg = "Dataset file {path} is missing or corrupt".format(path=path)
            raise FormatError(msg)
    (windows,) = binary.read_arrays(
        os.path.join(directory, WINDOWS_NAME), binary.WINDOWS_MAGIC
    )
    labels, deltas = binary.read_arrays(
        os.path.join(directory, LABELS_NAME), binary.LABELS_MAGIC
    )
    sources = manifest["sources"]
    origins = [sources[i]["id"] for i in manifest["sample_origins"]]
    source_tags = {source["id"]: source["split"] for source in sources}
    tags = [source_tags[origin] for origin in origins]
    if any(tag is None for tag in tags):
        tags = None
    info = {
        key: value
        for key, value in manifest.items()
        if key in ("augmentation", "split", "config_hash", "seed")
    }
    info["source_checksums"] = {source["id"]: source["checksum"] for source in sources}
    return LabeledDataset(
        windows,
        labels,
        origins,
        manifest["sample_augmentation_ids"],
        deltas,
        tags,
        manifest["k"],
        manifest["fs"],
        info,
    )
