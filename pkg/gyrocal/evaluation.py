# -*- coding: utf-8 -*-

"""
gyrocal.evaluation
~~~~~~~~~~~~~~~~~~

Metrics and reports of bias estimators

All errors are reported in mrad/s. The gamma ratio relates RMSE of an
estimator to RMSE of averaging full-length recordings::

    gamma = 100 * eps_model / eps_baseline
"""

import collections
import concurrent.futures
import logging

import numpy as np
import pandas as pd

from gyrocal.estimator import MeanEstimator, running_mean_curve
from gyrocal.exceptions import (
    ConfigurationError,
    InvalidParameterError,
    NumericalError,
)
from gyrocal.util import MRAD

log = logging.getLogger(__name__)

RMSE = collections.namedtuple("RMSE", ["pooled", "per_axis"])

EvalRow = collections.namedtuple(
    "EvalRow",
    ["k", "t", "model_rmse", "baseline_60s_rmse", "equal_duration_rmse", "gamma"],
)

TABLE_COLUMNS = (
    ("k", "K [-]"),
    ("t", "T [s]"),
    ("model_rmse", "RMSE [mrad/s]"),
    ("baseline_60s_rmse", "baseline RMSE [mrad/s]"),
    ("equal_duration_rmse", "equal-time RMSE [mrad/s]"),
    ("gamma", "gamma [%]"),
)


def rmse(predictions, labels):
    """
    Root mean squared error pooled over samples and axes

    :param predictions: Nx3 array in rad/s
    :param labels: Nx3 array in rad/s
    :raises InvalidParameterError: if inputs are empty or shapes differ
    :return: pooled and per-axis RMSE in mrad/s
    :rtype: :class:`RMSE`
    """
    predictions = np.atleast_2d(np.asarray(predictions, dtype=np.float64))
    labels = np.atleast_2d(np.asarray(labels, dtype=np.float64))
    if predictions.shape != labels.shape:
        msg = "Predictions {p} and labels {l} differ in shape".format(
            p=predictions.shape, l=labels.shape
        )
        raise InvalidParameterError(msg)
    if predictions.size == 0:
        raise InvalidParameterError("RMSE of empty input is undefined")
    squared = (predictions - labels) ** 2
    if not np.all(np.isfinite(squared)):
        raise NumericalError("Non-finite error values")
    pooled = float(np.sqrt(np.mean(squared)) * MRAD)
    per_axis = tuple(float(v) for v in np.sqrt(np.mean(squared, axis=0)) * MRAD)
    return RMSE(pooled, per_axis)


def gamma_ratio(eps_model, eps_baseline):
    """
    Model RMSE as percentage of baseline RMSE

    :raises NumericalError: if baseline isn't positive
    :rtype: float
    """
    if not eps_baseline > 0:
        msg = "Baseline RMSE {eps} leaves gamma undefined".format(eps=eps_baseline)
        raise NumericalError(msg)
    return 100.0 * eps_model / eps_baseline


class EvalResult(object):
    """
    Rows of the RMSE versus duration report

    :ivar rows: per-K :class:`EvalRow` ordered by increasing duration, the
        full-length averaging row last
    """

    def __init__(self, rows):
        self.rows = list(rows)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def to_frame(self):
        return pd.DataFrame(
            [row._asdict() for row in self.rows], columns=list(EvalRow._fields)
        )

    def format_table(self):
        """Aligned text table, errors with 5 decimals, gamma with 2"""
        header = [title for _, title in TABLE_COLUMNS]
        lines = []
        for row in self.rows:
            lines.append(
                [
                    "{0:d}".format(row.k),
                    "{0:g}".format(row.t),
                    "{0:.5f}".format(row.model_rmse),
                    "{0:.5f}".format(row.baseline_60s_rmse),
                    "{0:.5f}".format(row.equal_duration_rmse),
                    "{0:.2f}".format(row.gamma),
                ]
            )
        widths = [
            max(len(cell) for cell in column) for column in zip(header, *lines)
        ]
        text = []
        for cells in [header] + lines:
            text.append(
                "  ".join(cell.rjust(width) for cell, width in zip(cells, widths))
            )
        return "\n".join(text) + "\n"


def _full_length_errors(full_records):
    if not full_records:
        raise ConfigurationError("Full-length test records are required")
    estimates, truths = [], []
    for record in full_records:
        if record.true_bias is None:
            msg = "Record {source} has no true bias".format(source=record.source_id)
            raise ConfigurationError(msg)
        estimates.append(record.samples.mean(axis=0))
        truths.append(record.true_bias)
    return rmse(estimates, truths)


def _evaluate_k(k, model, dataset):
    if not len(dataset):
        msg = "Test split for K={k} is empty".format(k=k)
        raise ConfigurationError(msg)
    model_error = rmse(model.predict_batch(dataset.windows), dataset.labels)
    mean_error = rmse(MeanEstimator().predict_batch(dataset.windows), dataset.labels)
    log.debug(
        "K=%d: model RMSE %.5f, equal-time RMSE %.5f mrad/s",
        k,
        model_error.pooled,
        mean_error.pooled,
    )
    return model_error, mean_error, dataset.window_seconds


def evaluate(models, datasets, full_records, max_workers=None):
    """
    Compares per-K models against averaging estimators

    For each K the model RMSE and the RMSE of averaging each test window
    are computed against window labels. The baseline RMSE is the error of
    averaging the full-length `full_records` against their true bias.

    :param dict models: K to estimator with ``predict_batch``
    :param dict datasets: K to :class:`~gyrocal.dataset.LabeledDataset`,
        split datasets are reduced to their test partition
    :param full_records: full-length test :class:`~gyrocal.records.SignalRecord`
    :raises ConfigurationError: if K sets differ
    :raises NumericalError: if baseline RMSE is zero
    :rtype: :class:`EvalResult`
    """
    if set(models) != set(datasets):
        msg = "Model K values {m} don't match dataset K values {d}".format(
            m=sorted(models), d=sorted(datasets)
        )
        raise ConfigurationError(msg)
    baseline = _full_length_errors(list(full_records))
    ks = sorted(models, reverse=True)
    tests = {
        k: datasets[k].test if datasets[k].tags is not None else datasets[k] for k in ks
    }
    with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as executor:
        futures = [executor.submit(_evaluate_k, k, models[k], tests[k]) for k in ks]
        outcomes = [future.result() for future in futures]
    rows = []
    for k, (model_error, mean_error, seconds) in zip(ks, outcomes):
        rows.append(
            EvalRow(
                k,
                seconds,
                model_error.pooled,
                baseline.pooled,
                mean_error.pooled,
                gamma_ratio(model_error.pooled, baseline.pooled),
            )
        )
    duration = full_records[0].duration
    rows.append(
        EvalRow(
            1,
            duration,
            baseline.pooled,
            baseline.pooled,
            baseline.pooled,
            gamma_ratio(baseline.pooled, baseline.pooled),
        )
    )
    return EvalResult(rows)


def residual_report(record, reference=None, window=200):
    """
    Residual of cumulative mean against reference bias

    ``moving_std`` columns are the plain moving standard deviation of the
    samples over `window` samples. ``envelope`` columns divide it by
    ``sqrt(n)``, a standard-error band of the n-sample mean that decays like
    the residual.

    :param record: :class:`~gyrocal.records.SignalRecord`
    :param reference: (optional) reference bias, defaults to record's true
        bias
    :raises InvalidParameterError: if no reference is available
    :return: frame with columns time_s, residual_{x,y,z}, moving_std_{x,y,z}
        and envelope_{x,y,z} in rad/s
    :rtype: pandas.DataFrame
    """
    if reference is None:
        reference = record.true_bias
    if reference is None:
        msg = "Record {source} has no true bias, pass a reference".format(
            source=record.source_id
        )
        raise InvalidParameterError(msg)
    if window < 2:
        raise InvalidParameterError("Moving window needs two or more samples")
    reference = np.asarray(reference, dtype=np.float64)
    residual = running_mean_curve(record) - reference[:, np.newaxis]
    root_n = np.sqrt(np.arange(1, len(record) + 1))
    moving_std = (
        pd.DataFrame(record.samples)
        .rolling(window, min_periods=1)
        .std(ddof=0)
        .to_numpy()
    )
    frame = pd.DataFrame({"time_s": record.times})
    for index, axis in enumerate("xyz"):
        frame["residual_" + axis] = residual[index]
    for index, axis in enumerate("xyz"):
        frame["moving_std_" + axis] = moving_std[:, index]
    for index, axis in enumerate("xyz"):
        frame["envelope_" + axis] = moving_std[:, index] / root_n
    return frame


def error_vs_time(records, times):
    """
    RMSE of averaging first `t` seconds of records against true bias

    :param records: stationary :class:`~gyrocal.records.SignalRecord` with
        true bias
    :param times: averaging times in s
    :return: frame with columns time_s, baseline_rmse in mrad/s
    :rtype: pandas.DataFrame
    """
    records = list(records)
    if not records:
        raise ConfigurationError("Records are required")
    errors = []
    for t in times:
        estimates, truths = [], []
        for record in records:
            n = int(round(t * record.fs))
            if not 1 <= n <= len(record):
                msg = "Averaging time {t} s outside record {source}".format(
                    t=t, source=record.source_id
                )
                raise InvalidParameterError(msg)
            if record.true_bias is None:
                msg = "Record {source} has no true bias".format(source=record.source_id)
                raise ConfigurationError(msg)
            estimates.append(record.samples[:n].mean(axis=0))
            truths.append(record.true_bias)
        errors.append(rmse(estimates, truths).pooled)
    return pd.DataFrame(
        {"time_s": [float(t) for t in times], "baseline_rmse": errors},
        columns=["time_s", "baseline_rmse"],
    )


def error_curve_with_models(curve, result):
    """Adds model RMSE points of `result` as column model_rmse"""
    points = pd.DataFrame(
        {
            "time_s": [row.t for row in result.rows[:-1]],
            "model_rmse": [row.model_rmse for row in result.rows[:-1]],
        }
    )
    merged = pd.merge(curve, points, on="time_s", how="outer")
    return merged.sort_values("time_s").reset_index(drop=True)


def _write_csv(frame, path, comments):
    with open(path, "w", newline="") as fileobj:
        for key in sorted(comments or {}):
            fileobj.write("# {key}={value}\n".format(key=key, value=comments[key]))
        frame.to_csv(fileobj, index=False, lineterminator="\n", float_format="%.17g")


def write_table(result, path, comments=None):
    """
    Writes report as CSV at `path` and aligned text next to it

    :return: path of text table
    :rtype: str
    """
    _write_csv(result.to_frame(), path, comments)
    text_path = str(path).rsplit(".", 1)[0] + ".txt"
    with open(text_path, "w", newline="") as fileobj:
        for key in sorted(comments or {}):
            fileobj.write("# {key}={value}\n".format(key=key, value=comments[key]))
        fileobj.write(result.format_table())
    return text_path


def write_frame(frame, path, comments=None):
    _write_csv(frame, path, comments)


