# -*- coding: utf-8 -*-

"""
gyrocal.nn
~~~~~~~~~~

Minimal differentiable layers for the bias regressor

Layers work on batches: convolution and pooling take ``(N, C, L)`` arrays,
dense layers take ``(N, F)``. Single samples (``(C, L)`` or ``(F,)``) are
accepted by the module-level forward functions. Everything is float64.

Convolutions are valid (no padding) cross-correlations. Max pooling routes
gradient to the first maximum of every window.
"""

import collections
import logging

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from gyrocal import binary
from gyrocal.exceptions import DimensionError, FormatError, NumericalError, StateError

log = logging.getLogger(__name__)


class Parameter(object):
    """
    Trainable array with its gradient

    :param values: initial values
    :param str name: name used in messages and checkpoints
    """

    def __init__(self, values, name):
        self.values = np.array(values, dtype=np.float64)
        self.grad = np.zeros_like(self.values)
        self.name = name

    @property
    def shape(self):
        return self.values.shape

    @property
    def size(self):
        return self.values.size

    def __repr__(self):
        return "<{class_name} {name} {shape}>".format(
            class_name=self.__class__.__name__, name=self.name, shape=self.shape
        )


class Layer(object):
    """Base of all layers"""

    def __init__(self, name):
        self.name = name
        self._cache = None

    def parameters(self):
        return []

    def forward(self, x, training=True):
        raise NotImplementedError

    def backward(self, grad_output):
        raise NotImplementedError

    def output_shape(self, input_shape):
        raise NotImplementedError

    def _require_cache(self):
        if self._cache is None:
            msg = "Layer {name}: backward called before forward".format(name=self.name)
            raise StateError(msg)
        return self._cache

    def __repr__(self):
        return "<{class_name} {name}>".format(
            class_name=self.__class__.__name__, name=self.name
        )


def _dimension_error(layer, expected, actual):
    msg = "Layer {name}: expected input shape {expected}, got {actual}".format(
        name=layer, expected=expected, actual=tuple(actual)
    )
    return DimensionError(msg)


class Conv1D(Layer):
    """
    Valid 1D cross-correlation with per-channel bias

    ``out[n, o, l] = b[o] + sum_{c,j} w[o, c, j] x[n, c, l*stride + j]``

    :param int in_channels: input channels
    :param int out_channels: output channels
    :param int kernel_size: kernel length
    :param int stride: stride, at least 1
    :param rng: :class:`numpy.random.Generator` for He initialization, zeros
        if None
    """

    def __init__(
        self, in_channels, out_channels, kernel_size, stride=1, rng=None, name="conv"
    ):
        super(Conv1D, self).__init__(name)
        if stride < 1 or kernel_size < 1:
            msg = "Layer {name}: stride and kernel must be >= 1".format(name=name)
            raise DimensionError(msg)
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        shape = (out_channels, in_channels, kernel_size)
        weight = np.zeros(shape)
        if rng is not None:
            scale = np.sqrt(2.0 / (in_channels * kernel_size))
            weight = rng.standard_normal(shape) * scale
        self.weight = Parameter(weight, name + ".weight")
        self.bias = Parameter(np.zeros(out_channels), name + ".bias")

    def parameters(self):
        return [self.weight, self.bias]

    def output_shape(self, input_shape):
        channels, length = input_shape
        if channels != self.in_channels or length < self.kernel_size:
            raise _dimension_error(
                self.name,
                (self.in_channels, ">={k}".format(k=self.kernel_size)),
                input_shape,
            )
        return self.out_channels, (length - self.kernel_size) // self.stride + 1

    def forward(self, x, training=True):
        if x.ndim != 3:
            raise _dimension_error(self.name, ("N", self.in_channels, "L"), x.shape)
        _, length_out = self.output_shape(x.shape[1:])
        columns = sliding_window_view(x, self.kernel_size, axis=2)[:, :, :: self.stride]
        columns = columns[:, :, :length_out]
        out = np.tensordot(columns, self.weight.values, axes=([1, 3], [1, 2]))
        out = out.transpose(0, 2, 1) + self.bias.values[np.newaxis, :, np.newaxis]
        if training:
            self._cache = (x.shape, columns)
        return np.ascontiguousarray(out)

    def backward(self, grad_output):
        input_shape, columns = self._require_cache()
        length_out = grad_output.shape[2]
        self.weight.grad = np.tensordot(grad_output, columns, axes=([0, 2], [0, 2]))
        self.bias.grad = grad_output.sum(axis=(0, 2))
        # (N, L_out, C_in, k) contributions of every kernel tap
        taps = np.tensordot(grad_output, self.weight.values, axes=([1], [0]))
        grad_input = np.zeros(input_shape)
        stop = self.stride * (length_out - 1) + 1
        for j in range(self.kernel_size):
            grad_input[:, :, j : j + stop : self.stride] += taps[:, :, :, j].transpose(
                0, 2, 1
            )
        self._cache = None
        return grad_input


class MaxPool1D(Layer):
    """
    Per-channel maximum over windows, ties resolved to the earliest index

    :param int window: window length
    :param int stride: stride, defaults to window
    """

    def __init__(self, window, stride=None, name="pool"):
        super(MaxPool1D, self).__init__(name)
        self.window = window
        self.stride = window if stride is None else stride

    def output_shape(self, input_shape):
        channels, length = input_shape
        if length < self.window:
            raise _dimension_error(
                self.name, (channels, ">={w}".format(w=self.window)), input_shape
            )
        return channels, (length - self.window) // self.stride + 1

    def forward(self, x, training=True):
        if x.ndim != 3:
            raise _dimension_error(self.name, ("N", "C", "L"), x.shape)
        _, length_out = self.output_shape(x.shape[1:])
        windows = sliding_window_view(x, self.window, axis=2)[:, :, :: self.stride]
        windows = windows[:, :, :length_out]
        argmax = np.argmax(windows, axis=3)
        out = np.take_along_axis(windows, argmax[..., np.newaxis], axis=3)[..., 0]
        if training:
            positions = argmax + self.stride * np.arange(length_out)
            self._cache = (x.shape, positions)
        return out

    def backward(self, grad_output):
        input_shape, positions = self._require_cache()
        grad_input = np.zeros(input_shape)
        if self.stride >= self.window:
            np.put_along_axis(grad_input, positions, grad_output, axis=2)
        else:
            n_idx, c_idx, _ = np.indices(positions.shape)
            np.add.at(grad_input, (n_idx, c_idx, positions), grad_output)
        self._cache = None
        return grad_input


class ReLU(Layer):
    def __init__(self, name="relu"):
        super(ReLU, self).__init__(name)

    def output_shape(self, input_shape):
        return tuple(input_shape)

    def forward(self, x, training=True):
        mask = x > 0
        if training:
            self._cache = mask
        return x * mask

    def backward(self, grad_output):
        mask = self._require_cache()
        self._cache = None
        return grad_output * mask


class Flatten(Layer):
    def __init__(self, name="flatten"):
        super(Flatten, self).__init__(name)

    def output_shape(self, input_shape):
        return (int(np.prod(input_shape)),)

    def forward(self, x, training=True):
        if training:
            self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad_output):
        shape = self._require_cache()
        self._cache = None
        return grad_output.reshape(shape)


class Dense(Layer):
    """
    Fully-connected layer ``W x + b``

    :param int in_features: input features
    :param int out_features: output features
    :param rng: :class:`numpy.random.Generator` for He initialization, zeros
        if None
    """

    def __init__(self, in_features, out_features, rng=None, name="fc"):
        super(Dense, self).__init__(name)
        self.in_features = in_features
        self.out_features = out_features
        weight = np.zeros((out_features, in_features))
        if rng is not None:
            weight = rng.standard_normal(weight.shape) * np.sqrt(2.0 / in_features)
        self.weight = Parameter(weight, name + ".weight")
        self.bias = Parameter(np.zeros(out_features), name + ".bias")

    def parameters(self):
        return [self.weight, self.bias]

    def output_shape(self, input_shape):
        if tuple(input_shape) != (self.in_features,):
            raise _dimension_error(self.name, (self.in_features,), input_shape)
        return (self.out_features,)

    def forward(self, x, training=True):
        if x.ndim != 2:
            raise _dimension_error(self.name, ("N", self.in_features), x.shape)
        self.output_shape(x.shape[1:])
        if training:
            self._cache = x
        return x @ self.weight.values.T + self.bias.values

    def backward(self, grad_output):
        x = self._require_cache()
        self.weight.grad = grad_output.T @ x
        self.bias.grad = grad_output.sum(axis=0)
        self._cache = None
        return grad_output @ self.weight.values


class Sequential(object):
    """
    Stack of layers applied in order

    :param layers: list of :class:`Layer`
    :param bool check_finite: verify activations and gradients are finite
        after every layer
    """

    def __init__(self, layers, check_finite=False):
        self.layers = list(layers)
        self.check_finite = check_finite

    def parameters(self):
        return [param for layer in self.layers for param in layer.parameters()]

    @property
    def parameter_count(self):
        return sum(param.size for param in self.parameters())

    def output_shape(self, input_shape):
        shape = tuple(input_shape)
        for layer in self.layers:
            shape = layer.output_shape(shape)
        return shape

    def _check(self, layer, array, stage):
        if self.check_finite and not np.all(np.isfinite(array)):
            msg = "Non-finite {stage} after layer {name}".format(
                stage=stage, name=layer.name
            )
            raise NumericalError(msg)

    def forward(self, x, training=True):
        """
        Runs all layers

        With ``training=False`` no intermediate state is kept so concurrent
        calls with shared parameters are safe.
        """
        for layer in self.layers:
            x = layer.forward(x, training=training)
            self._check(layer, x, "activation")
        return x

    def backward(self, grad_output):
        """
        Propagates gradient of loss w.r.t. network output back through layers

        :raises StateError: if forward pass didn't precede
        :return: gradient w.r.t. network input
        """
        for layer in reversed(self.layers):
            grad_output = layer.backward(grad_output)
            self._check(layer, grad_output, "gradient")
        return grad_output

    def predict_batch(self, windows, batch_size=256):
        """
        Outputs for a batch of inputs without touching layer state

        :rtype: numpy.ndarray
        """
        windows = np.asarray(windows, dtype=np.float64)
        outputs = [
            self.forward(windows[start : start + batch_size], training=False)
            for start in range(0, len(windows), batch_size)
        ]
        return np.concatenate(outputs, axis=0)

    def state_arrays(self):
        return [param.values for param in self.parameters()]

    def load_state_arrays(self, arrays):
        params = self.parameters()
        if len(arrays) != len(params):
            msg = "Expected {n} parameter arrays, got {m}".format(
                n=len(params), m=len(arrays)
            )
            raise DimensionError(msg)
        for param, array in zip(params, arrays):
            if param.shape != np.shape(array):
                msg = "Parameter {name}: expected shape {expected}, got {actual}".format(
                    name=param.name, expected=param.shape, actual=np.shape(array)
                )
                raise DimensionError(msg)
        for param, array in zip(params, arrays):
            param.values = np.array(array, dtype=np.float64)


def _batched(x, single_ndim):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == single_ndim:
        return x[np.newaxis], True
    return x, False


def conv1d_forward(x, layer):
    """
    Forward pass of :class:`Conv1D` for a ``(C_in, L)`` sample or batch

    :raises DimensionError: on channel or length mismatch
    """
    x, single = _batched(x, 2)
    out = layer.forward(x, training=False)
    return out[0] if single else out


def maxpool1d(x, window, stride=None):
    """
    Max pooling of a ``(C, L)`` sample or batch

    :raises DimensionError: if window is longer than input
    """
    x, single = _batched(x, 2)
    out = MaxPool1D(window, stride).forward(x, training=False)
    return out[0] if single else out


def fc_forward(x, layer, activation=None):
    """
    Affine map of :class:`Dense` for a feature vector or batch, optionally
    followed by ``"relu"``
    """
    x, single = _batched(x, 1)
    out = layer.forward(x, training=False)
    if activation == "relu":
        out = np.maximum(out, 0.0)
    elif activation is not None:
        raise ValueError("Unknown activation {a!r}".format(a=activation))
    return out[0] if single else out


def mse_loss(pred, target):
    """
    Mean over batch and components of squared error

    Equals ``E{e^T e}`` divided by number of components.

    :rtype: float
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        msg = "Prediction shape {p} differs from target shape {t}".format(
            p=pred.shape, t=target.shape
        )
        raise DimensionError(msg)
    diff = pred - target
    return float(np.mean(diff * diff))


class MSELoss(object):
    """Mean squared error keeping state for backward"""

    def __init__(self):
        self._diff = None
        self.value = None

    def forward(self, pred, target):
        self.value = mse_loss(pred, target)
        self._diff = np.asarray(pred, dtype=np.float64) - target
        return self.value

    def backward(self):
        """Gradient of loss w.r.t. predictions"""
        if self._diff is None:
            raise StateError("Loss backward called before forward")
        grad = 2.0 * self._diff / self._diff.size
        self._diff = None
        return grad


def backward(network, loss):
    """
    Reverse-mode gradients of a scalar loss w.r.t. every parameter

    :param network: :class:`Sequential` after a training forward pass
    :param loss: :class:`MSELoss` after forward pass on network output
    :raises StateError: if forward passes didn't precede
    :return: ordered mapping of parameter name to gradient
    :rtype: collections.OrderedDict
    """
    network.backward(loss.backward())
    return collections.OrderedDict(
        (param.name, param.grad) for param in network.parameters()
    )


class OptimizerState(object):
    """
    Adaptive moment state

    :ivar first: first moment accumulators, one per parameter
    :ivar second: second moment accumulators
    :ivar step: number of performed updates
    """

    def __init__(
        self, shapes, learning_rate=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8
    ):
        self.first = [np.zeros(shape) for shape in shapes]
        self.second = [np.zeros(shape) for shape in shapes]
        self.step = 0
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon

    @classmethod
    def for_parameters(cls, params, **kwargs):
        return cls([param.shape for param in params], **kwargs)

    def arrays(self):
        return self.first + self.second


def optimizer_step(params, grads, state):
    """
    Adaptive moment update with bias-corrected moments

    Parameters are updated in place.

    :param params: list of :class:`Parameter`
    :param grads: list of gradient arrays
    :param state: :class:`OptimizerState`, updated in place
    """
    if len(params) != len(grads) or len(params) != len(state.first):
        msg = "Parameters, gradients and optimizer state differ in count"
        raise DimensionError(msg)
    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step
    for index, (param, grad) in enumerate(zip(params, grads)):
        if np.shape(grad) != param.shape:
            msg = "Gradient of {name}: expected shape {expected}, got {actual}".format(
                name=param.name, expected=param.shape, actual=np.shape(grad)
            )
            raise DimensionError(msg)
        first = state.first[index]
        second = state.second[index]
        first *= state.beta1
        first += (1.0 - state.beta1) * grad
        second *= state.beta2
        second += (1.0 - state.beta2) * grad * grad
        update = (first / correction1) / (np.sqrt(second / correction2) + state.epsilon)
        param.values -= state.learning_rate * update
    return params, state


def save_parameters(network, path):
    binary.write_arrays(path, binary.CHECKPOINT_MAGIC, network.state_arrays())


def load_parameters(network, path):
    """
    Loads checkpoint into network of the same architecture

    :raises FormatError: on corrupt file
    :raises DimensionError: on architecture mismatch
    """
    arrays = binary.read_arrays(path, binary.CHECKPOINT_MAGIC)
    network.load_state_arrays(arrays)
    return network


def gradient_check(network, x, y, step=1e-6, max_entries=None, seed=0, floor=1e-8):
    """
    Compares analytic gradients with central finite differences

    :param network: :class:`Sequential`
    :param x: input batch
    :param y: target batch
    :param float step: finite difference step
    :param int max_entries: (optional) check at most this many random entries
        of every parameter
    :return: mapping of parameter name to maximal relative error
    :rtype: dict
    """
    criterion = MSELoss()
    criterion.forward(network.forward(x), y)
    grads = backward(network, criterion)
    analytic = {name: grad.copy() for name, grad in grads.items()}
    rng = np.random.default_rng(seed)
    errors = {}
    for param in network.parameters():
        flat = param.values.reshape(-1)
        entries = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            entries = np.sort(rng.choice(flat.size, max_entries, replace=False))
        worst = 0.0
        for entry in entries:
            original = flat[entry]
            flat[entry] = original + step
            plus = mse_loss(network.forward(x, training=False), y)
            flat[entry] = original - step
            minus = mse_loss(network.forward(x, training=False), y)
            flat[entry] = original
            numeric = (plus - minus) / (2.0 * step)
            exact = analytic[param.name].reshape(-1)[entry]
            scale = max(abs(numeric), abs(exact), floor)
            worst = max(worst, abs(numeric - exact) / scale)
        errors[param.name] = worst
    return errors
