"""
This file is part of corpus-align.

It defines the dense-network engine shared by the AudioNet and the
AlignmentNet: flat parameter vectors with an explicit layer layout,
the forward pass, reverse-mode gradients of the mean-squared error,
first-order optimizers and a finite-difference gradient check.

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""
import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, NumericError, ConfigurationError

logger = logging.getLogger(__name__)

ACTIVATIONS = ('relu', 'linear')
OPTIMIZERS = ('adam', 'sgd')


@dataclass(frozen=True)
class LayerSpec:
    """Descriptor of one affine layer, followed by its activation."""
    in_width: int
    out_width: int
    activation: str = 'relu'

    def __post_init__(self):
        if self.in_width < 1 or self.out_width < 1:
            raise ShapeError('Layer widths must be positive, got %d -> %d'
                             % (self.in_width, self.out_width))
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(
                'Unknown activation %r.\nThe available activations are: %s'
                % (self.activation, ', '.join(ACTIVATIONS)))

    @property
    def size(self):
        return self.in_width * self.out_width + self.out_width


def make_layout(widths):
    """
    Build the layout of a fully connected stack

    Parameters
    ----------
    widths: sequence of ints
        Input width, hidden widths and output width, in that order
        (e.g. `(16, 64, 64, 32, 1)`).
        Every layer is followed by a ReLU, except the last one,
        which is linear.

    Returns
    -------
    A tuple of LayerSpec
    """
    widths = [int(w) for w in widths]
    if len(widths) < 2:
        raise ShapeError('A layout needs at least an input and an output '
                         'width, got %s' % (widths,))
    n_layers = len(widths) - 1
    return tuple(
        LayerSpec(widths[i], widths[i + 1],
                  'linear' if i == n_layers - 1 else 'relu')
        for i in range(n_layers))


def param_count(layout):
    """Number of parameters (weights and biases) described by `layout`."""
    return sum(layer.size for layer in layout)


class _LayeredVector(object):
    """
    A flat float64 vector whose slices are the weight matrices and bias
    vectors of a sequence of layers
    """

    def __init__(self, layout, values=None):
        self._layout = tuple(layout)
        n = param_count(self._layout)
        if values is None:
            values = np.zeros(n)
        values = np.array(values, dtype=np.float64).ravel()
        if values.size != n:
            raise ShapeError(
                'Expected %d values for this layout, got %d' % (n, values.size))
        self.values = values

    @property
    def layout(self):
        return self._layout

    def __len__(self):
        return self.values.size

    def layers(self):
        """
        Return a list of (W, b) views, one per layer, where W has shape
        (in_width, out_width) and b has shape (out_width,)
        """
        views = []
        start = 0
        for layer in self._layout:
            n_w = layer.in_width * layer.out_width
            W = self.values[start:start + n_w].reshape(
                layer.in_width, layer.out_width)
            b = self.values[start + n_w:start + n_w + layer.out_width]
            views.append((W, b))
            start += layer.size
        return views

    def digest(self):
        """Hexadecimal SHA-256 of the raw parameter bytes."""
        return hashlib.sha256(self.values.tobytes()).hexdigest()

    def copy(self):
        return type(self)(self._layout, self.values.copy())

    def same_layout(self, other):
        return self._layout == other.layout

    def with_values(self, values):
        """Vector of the same type and layout holding `values`."""
        return type(self)(self._layout, values)


class ParamVector(_LayeredVector):
    """Trainable parameters of a dense stack."""

    @classmethod
    def initialize(cls, layout, rng):
        """
        Draw weights uniformly in +/- sqrt(6 / (fan_in + fan_out));
        biases start at zero

        Parameters
        ----------
        layout: tuple of LayerSpec

        rng: numpy.random.Generator
        """
        params = cls(layout)
        for layer, (W, b) in zip(params.layout, params.layers()):
            limit = np.sqrt(6. / (layer.in_width + layer.out_width))
            W[...] = rng.uniform(-limit, limit, size=W.shape)
        return params


class GradientVector(_LayeredVector):
    """Gradient of a scalar loss with respect to a ParamVector."""
    pass


@dataclass
class Batch:
    """
    A minibatch of one dataset

    Attributes
    ----------
    inputs: 2darray (rows = samples, columns = features)

    targets: 1darray, one target per row

    dataset_index: int
        Index of the dataset the rows come from
    """
    inputs: np.ndarray
    targets: np.ndarray
    dataset_index: int = 0

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=np.float64))
        self.targets = np.asarray(self.targets, dtype=np.float64).ravel()
        if self.inputs.shape[0] < 1:
            raise ShapeError('A batch needs at least one row')
        if self.inputs.shape[0] != self.targets.size:
            raise ShapeError(
                'The batch has %d input rows but %d targets'
                % (self.inputs.shape[0], self.targets.size))
        if self.dataset_index < 0:
            raise ShapeError('dataset_index must be nonnegative')


@dataclass
class ForwardTrace:
    """Intermediate values of a forward pass, kept for backpropagation."""
    activations: list
    preactivations: list

    @property
    def output(self):
        return self.activations[-1]


def forward_trace(params, inputs):
    """
    Run the forward pass and keep every pre-activation and activation

    Parameters
    ----------
    params: ParamVector

    inputs: 2darray of shape (rows, in_width)

    Returns
    -------
    A ForwardTrace
    """
    a = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if len(params.layout) == 0:
        raise ShapeError('Cannot evaluate a network without layers')
    if a.shape[1] != params.layout[0].in_width:
        raise ShapeError(
            'The input has %d columns but the first layer expects %d'
            % (a.shape[1], params.layout[0].in_width))
    activations = [a]
    preactivations = []
    for layer, (W, b) in zip(params.layout, params.layers()):
        z = a @ W + b
        preactivations.append(z)
        if layer.activation == 'relu':
            a = np.maximum(z, 0.)
        else:
            a = z
        activations.append(a)
    return ForwardTrace(activations, preactivations)


def mlp_forward(params, inputs):
    """
    Evaluate the network on every row of `inputs`

    Returns a 1darray (one value per row) when the last layer has a single
    output, and a 2darray of shape (rows, out_width) otherwise.
    """
    out = forward_trace(params, inputs).output
    if out.shape[1] == 1:
        return out[:, 0]
    return out


def backprop(params, trace, d_output):
    """
    Propagate the gradient `d_output` (of some scalar with respect to the
    network output) back through the layers

    Parameters
    ----------
    params: ParamVector
        The parameters used to produce `trace`

    trace: ForwardTrace

    d_output: 2darray of shape (rows, out_width)

    Returns
    -------
    A tuple with
       grad: 1darray with the layout of `params`
       d_inputs: 2darray of shape (rows, in_width)
    """
    da = np.asarray(d_output, dtype=np.float64)
    if da.ndim == 1:
        da = da[:, None]
    if da.shape != trace.output.shape:
        raise ShapeError('d_output has shape %s, expected %s'
                         % (da.shape, trace.output.shape))
    grad = np.empty(len(params))
    offsets = np.cumsum([0] + [layer.size for layer in params.layout])
    layers = params.layers()
    for i in reversed(range(len(params.layout))):
        layer = params.layout[i]
        W, _ = layers[i]
        if layer.activation == 'relu':
            dz = da * (trace.preactivations[i] > 0.)
        else:
            dz = da
        n_w = layer.in_width * layer.out_width
        grad[offsets[i]:offsets[i] + n_w] = (trace.activations[i].T @ dz).ravel()
        grad[offsets[i] + n_w:offsets[i + 1]] = dz.sum(axis=0)
        da = dz @ W.T
    return grad, da


def mse(pred, target):
    """
    Mean of the squared element-wise differences

    Parameters
    ----------
    pred, target: 1darrays of equal, nonzero length
    """
    pred = np.asarray(pred, dtype=np.float64).ravel()
    target = np.asarray(target, dtype=np.float64).ravel()
    if pred.size != target.size:
        raise ShapeError('mse: lengths differ (%d vs %d)'
                         % (pred.size, target.size))
    if pred.size == 0:
        raise ShapeError('mse: empty vectors')
    return float(np.mean((pred - target) ** 2))


def check_finite(values, what):
    """Raise a NumericError naming `what` if `values` holds a NaN or inf."""
    values = np.asarray(values)
    if not np.all(np.isfinite(values)):
        n_bad = int(np.sum(~np.isfinite(values)))
        raise NumericError('Non-finite %s (%d component(s))' % (what, n_bad))


def backward(params, batch, loss_weight=1.):
    """
    Loss and exact gradient of `loss_weight * mse(forward(inputs), targets)`

    The residuals are backpropagated unscaled and the gradient is scaled
    by `2 * loss_weight / rows` at the end.

    Parameters
    ----------
    params: ParamVector (single-output network)

    batch: Batch

    loss_weight: float

    Returns
    -------
    A tuple with
       loss: float
       grads: GradientVector
    """
    trace = forward_trace(params, batch.inputs)
    if trace.output.shape[1] != 1:
        raise ShapeError('backward expects a single-output network')
    residual = trace.output[:, 0] - batch.targets
    n = residual.size
    loss = loss_weight * float(np.mean(residual ** 2))
    check_finite(loss, 'loss')
    raw, _ = backprop(params, trace, residual[:, None])
    grads = raw * (2. * loss_weight / n)
    check_finite(grads, 'gradient')
    return loss, GradientVector(params.layout, grads)


@dataclass
class OptimizerState:
    """
    State of a first-order optimizer

    `mode` is either 'adam' (first/second moment estimates with bias
    correction) or 'sgd' (plain gradient descent, no state).
    """
    mode: str = 'adam'
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)


def init_optimizer(params, mode='adam', beta1=0.9, beta2=0.999, epsilon=1e-8):
    """Fresh optimizer state for `params`."""
    if mode not in OPTIMIZERS:
        raise ConfigurationError(
            'Unknown optimizer %r.\nThe available optimizers are: %s'
            % (mode, ', '.join(OPTIMIZERS)))
    state = OptimizerState(mode=mode, beta1=beta1, beta2=beta2,
                           epsilon=epsilon)
    if mode == 'adam':
        state.m = np.zeros(params.values.size)
        state.v = np.zeros(params.values.size)
    return state


def optimizer_step(params, grads, state, step_size):
    """
    Apply one update

    Parameters
    ----------
    params: ParamVector

    grads: GradientVector with the layout of `params`

    state: OptimizerState

    step_size: float

    Returns
    -------
    A tuple with the updated ParamVector and OptimizerState
    (the inputs are left untouched)
    """
    if not params.same_layout(grads):
        raise ShapeError('Parameter and gradient layouts differ')
    check_finite(grads.values, 'gradient')
    g = grads.values
    if state.mode == 'sgd':
        new_values = params.values - step_size * g
        new_state = OptimizerState(mode='sgd', step=state.step + 1)
    elif state.mode == 'adam':
        if state.m is None or state.m.size != g.size:
            raise ShapeError('Optimizer state does not match the parameters')
        t = state.step + 1
        m = state.beta1 * state.m + (1. - state.beta1) * g
        v = state.beta2 * state.v + (1. - state.beta2) * g * g
        m_hat = m / (1. - state.beta1 ** t)
        v_hat = v / (1. - state.beta2 ** t)
        new_values = params.values - step_size * m_hat / (
            np.sqrt(v_hat) + state.epsilon)
        new_state = OptimizerState(mode='adam', beta1=state.beta1,
                                   beta2=state.beta2, epsilon=state.epsilon,
                                   step=t, m=m, v=v)
    else:
        raise ConfigurationError('Unknown optimizer %r' % state.mode)
    check_finite(new_values, 'parameters after the update')
    return params.with_values(new_values), new_state


def _weighted_loss_at(params, batch, loss_weight):
    pred = mlp_forward(params, batch.inputs)
    return loss_weight * mse(pred, batch.targets)


def finite_difference_check(params, batch, eps=1e-5, loss_weight=1.,
                            grads=None):
    """
    Compare an analytic gradient with central finite differences

    Parameters
    ----------
    params: ParamVector

    batch: Batch

    eps: float
        Perturbation applied to each parameter in turn

    loss_weight: float

    grads: GradientVector, optional
        The gradient to check. Defaults to the one computed by `backward`.

    Returns
    -------
    The maximum over parameters of
    |analytic - numeric| / max(|analytic|, |numeric|, 1e-12)
    (0 for a layout without parameters)
    """
    if eps <= 0:
        raise ConfigurationError('eps must be positive, got %r' % eps)
    if len(params) == 0:
        return 0.
    if grads is None:
        _, grads = backward(params, batch, loss_weight)
    analytic = grads.values
    shifted = params.copy()
    worst = 0.
    for k in range(len(params)):
        original = shifted.values[k]
        shifted.values[k] = original + eps
        loss_plus = _weighted_loss_at(shifted, batch, loss_weight)
        shifted.values[k] = original - eps
        loss_minus = _weighted_loss_at(shifted, batch, loss_weight)
        shifted.values[k] = original
        numeric = (loss_plus - loss_minus) / (2. * eps)
        scale = max(abs(analytic[k]), abs(numeric), 1e-12)
        worst = max(worst, abs(analytic[k] - numeric) / scale)
    logger.debug('finite-difference check over %d parameters: %.3e',
                 len(params), worst)
    return worst
