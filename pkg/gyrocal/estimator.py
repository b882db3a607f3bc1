# -*- coding: utf-8 -*-

"""
gyrocal.estimator
~~~~~~~~~~~~~~~~~

Bias estimators under comparison

* the averaging baseline, per-axis mean of a window,
* the convolutional regressor trained on labelled windows.

The regressor works in mrad/s on the window split into its per-axis mean
and the centered remainder. Three branches add up::

    mean     -> dc(3x3)
    centered -> taper(L), same filter on every axis
    centered -> conv(16, k7) -> relu -> maxpool(4) -> conv(32, k7) -> relu
             -> maxpool(4) -> flatten -> fc(64) -> relu -> fc(3)

The mean path, the taper and the last dense layer start at zero, so the
untrained regressor outputs zero and the mean path is learned like every
other weight. Bias lives in the DC component of a window which only the
mean path sees, the other branches learn corrections from its shape.
"""

import collections
import copy
import logging
import os

import numpy as np
import pandas as pd

from gyrocal import binary
from gyrocal.dataset import partition_sources
from gyrocal.exceptions import ConfigurationError, DimensionError, GyrocalException
from gyrocal.meta import read_metadata, write_metadata
from gyrocal.nn import (
    Conv1D,
    Dense,
    Flatten,
    MaxPool1D,
    MSELoss,
    OptimizerState,
    ReLU,
    Sequential,
    backward,
    optimizer_step,
)
from gyrocal.util import MRAD, make_rng

log = logging.getLogger(__name__)


_BiasNetSpec = collections.namedtuple(
    "BiasNetSpec",
    [
        "length",
        "in_channels",
        "conv1_channels",
        "conv1_kernel",
        "conv1_stride",
        "pool1",
        "conv2_channels",
        "conv2_kernel",
        "conv2_stride",
        "pool2",
        "hidden",
        "outputs",
    ],
)


class BiasNetSpec(_BiasNetSpec):
    """Architecture of the bias regressor for windows of `length` samples"""

    __slots__ = ()

    def __new__(
        cls,
        length=200,
        in_channels=3,
        conv1_channels=16,
        conv1_kernel=7,
        conv1_stride=1,
        pool1=4,
        conv2_channels=32,
        conv2_kernel=7,
        conv2_stride=1,
        pool2=4,
        hidden=64,
        outputs=3,
    ):
        return super(BiasNetSpec, cls).__new__(
            cls,
            int(length),
            int(in_channels),
            int(conv1_channels),
            int(conv1_kernel),
            int(conv1_stride),
            int(pool1),
            int(conv2_channels),
            int(conv2_kernel),
            int(conv2_stride),
            int(pool2),
            int(hidden),
            int(outputs),
        )

    @property
    def input_shape(self):
        return self.in_channels, self.length


_TrainConfig = collections.namedtuple(
    "TrainConfig",
    [
        "epochs",
        "batch_size",
        "learning_rate",
        "seed",
        "patience",
        "validation_fraction",
    ],
)


class TrainConfig(_TrainConfig):
    __slots__ = ()

    def __new__(
        cls,
        epochs=200,
        batch_size=32,
        learning_rate=1e-3,
        seed=0,
        patience=10,
        validation_fraction=0.1,
    ):
        if epochs < 1 or batch_size < 1 or patience < 1 or not learning_rate > 0:
            msg = "Epochs, batch size, patience and learning rate must be positive"
            raise ConfigurationError(msg)
        if not 0 < validation_fraction <= 0.5:
            raise ConfigurationError("Validation fraction must be in (0, 0.5]")
        return super(TrainConfig, cls).__new__(
            cls,
            int(epochs),
            int(batch_size),
            float(learning_rate),
            int(seed),
            int(patience),
            float(validation_fraction),
        )


LossCurve = collections.namedtuple("LossCurve", ["train_rmse", "val_rmse"])

TrainResult = collections.namedtuple(
    "TrainResult", ["network", "curve", "best_epoch", "epochs_run"]
)


def baseline_bias(record_or_window):
    """
    Averaging estimator, per-axis mean of a 3xL window or a record

    :rtype: numpy.ndarray
    """
    if hasattr(record_or_window, "windows"):
        record_or_window = record_or_window.windows()
    window = np.asarray(record_or_window, dtype=np.float64)
    if window.ndim != 2 or window.shape[0] != 3 or window.shape[1] < 1:
        msg = "Window must be 3xL with L >= 1, got {shape}".format(shape=window.shape)
        raise DimensionError(msg)
    return window.mean(axis=1)


def running_mean_curve(record):
    """
    Cumulative mean, entry t is mean of samples 0..t

    :param record: :class:`~gyrocal.records.SignalRecord` or 3xL window
    :return: 3xL array
    :rtype: numpy.ndarray
    """
    if hasattr(record, "windows"):
        record = record.windows()
    window = np.asarray(record, dtype=np.float64)
    if window.ndim != 2 or window.shape[0] != 3 or window.shape[1] < 1:
        msg = "Window must be 3xL with L >= 1, got {shape}".format(shape=window.shape)
        raise DimensionError(msg)
    return np.cumsum(window, axis=1) / np.arange(1, window.shape[1] + 1)


class MeanEstimator(object):
    """Averaging baseline with the interface of a trained network"""

    def predict_batch(self, windows):
        return np.asarray(windows, dtype=np.float64).mean(axis=2)


class BiasNet(Sequential):
    """
    Residual regressor, window mean plus learned corrections

    Outputs of :meth:`forward` are in mrad/s, :meth:`predict_batch` returns
    rad/s.

    :param features: :class:`~gyrocal.nn.Sequential` conv stack mapping a
        centered window to one value per axis
    :param dc: :class:`~gyrocal.nn.Dense` applied to the window mean
    :param taper: :class:`~gyrocal.nn.Conv1D` with one channel and a kernel
        as long as the window, applied to every centered axis
    :param input_shape: (channels, length) of accepted windows
    :param float scale: factor from rad/s to network units
    """

    def __init__(self, features, dc, taper, input_shape, scale=MRAD):
        super(BiasNet, self).__init__(features.layers + [dc, taper])
        self.features = features
        self.dc = dc
        self.taper = taper
        self.input_shape = tuple(input_shape)
        self.scale = float(scale)

    def output_shape(self, input_shape):
        if tuple(input_shape) != self.input_shape:
            raise DimensionError(
                "Expected input shape {expected}, got {actual}".format(
                    expected=self.input_shape, actual=tuple(input_shape)
                )
            )
        return (self.dc.out_features,)

    def forward(self, x, training=True):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3:
            raise DimensionError(
                "Expected Nx{c}x{l} windows, got {shape}".format(
                    c=self.input_shape[0], l=self.input_shape[1], shape=x.shape
                )
            )
        self.output_shape(x.shape[1:])
        n, channels, length = x.shape
        scaled = x * self.scale
        mean = scaled.mean(axis=2)
        centered = scaled - mean[:, :, np.newaxis]
        filtered = self.taper.forward(
            centered.reshape(n * channels, 1, length), training=training
        )
        out = (
            self.dc.forward(mean, training=training)
            + filtered.reshape(n, channels)
            + self.features.forward(centered, training=training)
        )
        self._check(self.dc, out, "activation")
        return out

    def backward(self, grad_output):
        n, channels = grad_output.shape
        length = self.input_shape[1]
        grad_mean = self.dc.backward(grad_output)
        grad_centered = self.features.backward(grad_output)
        grad_centered += self.taper.backward(
            grad_output.reshape(n * channels, 1, 1)
        ).reshape(n, channels, length)
        grad = grad_centered - grad_centered.mean(axis=2, keepdims=True)
        grad += grad_mean[:, :, np.newaxis] / length
        return grad * self.scale

    def predict_batch(self, windows, batch_size=256):
        """Bias estimates in rad/s"""
        return super(BiasNet, self).predict_batch(windows, batch_size) / self.scale


def build_network(spec, seed=0):
    """
    Creates freshly initialized regressor for `spec`

    :raises ConfigurationError: if window length is too short for the
        convolution and pooling stack
    :rtype: :class:`BiasNet`
    """
    if spec.in_channels != spec.outputs:
        msg = "Regressor needs one output per input channel, got {i} and {o}".format(
            i=spec.in_channels, o=spec.outputs
        )
        raise ConfigurationError(msg)
    rng = make_rng(seed, 0)
    layers = [
        Conv1D(
            spec.in_channels,
            spec.conv1_channels,
            spec.conv1_kernel,
            spec.conv1_stride,
            rng,
            "conv1",
        ),
        ReLU("relu1"),
        MaxPool1D(spec.pool1, name="pool1"),
        Conv1D(
            spec.conv1_channels,
            spec.conv2_channels,
            spec.conv2_kernel,
            spec.conv2_stride,
            rng,
            "conv2",
        ),
        ReLU("relu2"),
        MaxPool1D(spec.pool2, name="pool2"),
        Flatten(),
    ]
    features = Sequential(layers)
    try:
        (n_features,) = features.output_shape(spec.input_shape)
    except DimensionError as err:
        msg = "Window length {length} is too short for the network: {err}".format(
            length=spec.length, err=err
        )
        raise ConfigurationError(msg)
    features.layers.extend(
        [
            Dense(n_features, spec.hidden, rng, "fc1"),
            ReLU("relu3"),
            Dense(spec.hidden, spec.outputs, None, "fc2"),
        ]
    )
    network = BiasNet(
        features,
        Dense(spec.in_channels, spec.outputs, None, "dc"),
        Conv1D(1, 1, spec.length, name="taper"),
        spec.input_shape,
    )
    log.debug(
        "Built network for %s input with %d parameters",
        spec.input_shape,
        network.parameter_count,
    )
    return network


def predict(network, window):
    """
    Bias estimate of a single 3xL window

    Parameters and layer state are left untouched.

    :raises DimensionError: if window shape doesn't match the network
    :rtype: numpy.ndarray
    """
    window = np.asarray(window, dtype=np.float64)
    expected = getattr(network, "input_shape", None)
    if expected is not None and window.shape != tuple(expected):
        msg = "Window shape {actual} doesn't match network input {expected}".format(
            actual=window.shape, expected=tuple(expected)
        )
        raise DimensionError(msg)
    return network.predict_batch(window[np.newaxis])[0]


def equivariance_error(network, windows, delta):
    """
    Mean of ``|predict(x + delta) - predict(x) - delta| / |delta|``

    :param windows: Nx3xL array
    :param delta: constant offset, 3-vector in rad/s
    :rtype: float
    """
    delta = np.asarray(delta, dtype=np.float64)
    windows = np.asarray(windows, dtype=np.float64)
    shifted = network.predict_batch(windows + delta[np.newaxis, :, np.newaxis])
    plain = network.predict_batch(windows)
    error = np.linalg.norm(shifted - plain - delta, axis=1)
    return float(np.mean(error) / np.linalg.norm(delta))


def _rmse(network, dataset):
    pred = network.predict_batch(dataset.windows)
    return float(np.sqrt(np.mean((pred - dataset.labels) ** 2)) * MRAD)


class TrainingState(object):
    """
    Everything needed to continue training after an interruption

    Stored as a binary container of parameters, optimizer moments and best
    parameters, with a sidecar holding counters and the loss curve.
    """

    def __init__(self, network, optimizer, best_arrays=None):
        self.network = network
        self.optimizer = optimizer
        self.best_arrays = best_arrays or [a.copy() for a in network.state_arrays()]
        self.epoch = 0
        self.best_epoch = 0
        self.best_val = float("inf")
        self.bad_epochs = 0
        self.train_rmse = []
        self.val_rmse = []

    def save(self, path, comments=None):
        arrays = (
            self.network.state_arrays() + self.optimizer.arrays() + self.best_arrays
        )
        binary.write_arrays(path, binary.STATE_MAGIC, arrays)
        meta = {
            "epoch": self.epoch,
            "step": self.optimizer.step,
            "best_epoch": self.best_epoch,
            "best_val": self.best_val,
            "bad_epochs": self.bad_epochs,
            "train_rmse": list(self.train_rmse),
            "val_rmse": list(self.val_rmse),
        }
        meta.update(comments or {})
        write_metadata(path, meta)

    def load(self, path):
        arrays = binary.read_arrays(path, binary.STATE_MAGIC)
        n_params = len(self.network.parameters())
        if len(arrays) != 4 * n_params:
            raise DimensionError("Training state doesn't match network architecture")
        self.network.load_state_arrays(arrays[:n_params])
        self.optimizer.first = [a.copy() for a in arrays[n_params : 2 * n_params]]
        self.optimizer.second = [a.copy() for a in arrays[2 * n_params : 3 * n_params]]
        self.best_arrays = [a.copy() for a in arrays[3 * n_params :]]
        meta = read_metadata(path)
        meta.raise_for_keys("epoch", "step", "best_epoch", "best_val", "bad_epochs")
        self.epoch = int(meta["epoch"])
        self.optimizer.step = int(meta["step"])
        self.best_epoch = int(meta["best_epoch"])
        self.best_val = float(meta["best_val"])
        self.bad_epochs = int(meta["bad_epochs"])
        self.train_rmse = [float(v) for v in meta["train_rmse"]]
        self.val_rmse = [float(v) for v in meta["val_rmse"]]
        return self


def _validation_split(train_set, config):
    sources = train_set.sources
    if len(sources) < 2:
        log.warning("Single train source, validating on training data")
        return train_set, train_set
    fit_sources, val_sources = partition_sources(
        sources, 1.0 - config.validation_fraction, config.seed
    )
    return train_set.by_sources(fit_sources), train_set.by_sources(val_sources)


def train(dataset, spec, config, state_path=None, comments=None):
    """
    Mini-batch training of the regressor by MSE minimization

    Validation sources are carved from the train split. The network with the
    lowest validation RMSE is returned. If `state_path` is given the training
    state is saved after every epoch and an existing state is resumed.
    The loss is taken in network units, mrad/s.

    :param dataset: split :class:`~gyrocal.dataset.LabeledDataset`
    :param spec: :class:`BiasNetSpec`
    :param config: :class:`TrainConfig`
    :param str state_path: (optional) path of resumable training state
    :raises ConfigurationError: if window length doesn't match spec or there
        is nothing to train on
    :rtype: :class:`TrainResult`
    """
    if dataset.window_length != spec.length:
        msg = "Dataset windows have {actual} samples, network expects {expected}".format(
            actual=dataset.window_length, expected=spec.length
        )
        raise ConfigurationError(msg)
    train_set = dataset.train if dataset.tags is not None else dataset
    if not len(train_set):
        raise ConfigurationError("Train split is empty")
    fit_set, val_set = _validation_split(train_set, config)
    network = build_network(spec, config.seed)
    optimizer = OptimizerState.for_parameters(
        network.parameters(), learning_rate=config.learning_rate
    )
    state = TrainingState(network, optimizer)
    if state_path is not None and os.path.exists(state_path):
        try:
            state.load(state_path)
        except GyrocalException as err:
            msg = "Can't resume from {path}: {err}".format(path=state_path, err=err)
            raise ConfigurationError(msg)
        log.info("Resuming training from epoch %d", state.epoch)
    params = network.parameters()
    criterion = MSELoss()
    n_fit = len(fit_set)
    while state.epoch < config.epochs and state.bad_epochs < config.patience:
        epoch = state.epoch
        order = make_rng(config.seed, 1, epoch).permutation(n_fit)
        squared_sum = 0.0
        for start in range(0, n_fit, config.batch_size):
            batch = order[start : start + config.batch_size]
            pred = network.forward(fit_set.windows[batch])
            loss = criterion.forward(pred, fit_set.labels[batch] * network.scale)
            grads = backward(network, criterion)
            optimizer_step(params, list(grads.values()), optimizer)
            squared_sum += loss * len(batch)
            log.debug("Epoch %d batch %d loss %g", epoch + 1, start, loss)
        train_rmse = float(np.sqrt(squared_sum / n_fit) * MRAD / network.scale)
        val_rmse = _rmse(network, val_set)
        state.train_rmse.append(train_rmse)
        state.val_rmse.append(val_rmse)
        state.epoch = epoch + 1
        if val_rmse < state.best_val:
            state.best_val = val_rmse
            state.best_epoch = state.epoch
            state.best_arrays = [a.copy() for a in network.state_arrays()]
            state.bad_epochs = 0
        else:
            state.bad_epochs += 1
        log.info(
            "Epoch %d: train RMSE %.5f mrad/s, validation RMSE %.5f mrad/s",
            state.epoch,
            train_rmse,
            val_rmse,
        )
        if state_path is not None:
            state.save(state_path, comments)
    best = copy.deepcopy(network)
    best.load_state_arrays(state.best_arrays)
    curve = LossCurve(list(state.train_rmse), list(state.val_rmse))
    return TrainResult(best, curve, state.best_epoch, state.epoch)


def write_loss_curve(curve, path, comments=None):
    """Writes CSV with columns epoch, train_rmse, val_rmse in mrad/s"""
    frame = pd.DataFrame(
        {
            "epoch": np.arange(1, len(curve.train_rmse) + 1),
            "train_rmse": curve.train_rmse,
            "val_rmse": curve.val_rmse,
        },
        columns=["epoch", "train_rmse", "val_rmse"],
    )
    with open(path, "w", newline="") as fileobj:
        for key in sorted(comments or {}):
            fileobj.write("# {key}={value}\n".format(key=key, value=comments[key]))
        frame.to_csv(fileobj, index=False, lineterminator="\n")
