"""
This file is part of corpus-align.

It defines the composed estimator: an AudioNet producing intermediate,
reference-scale scores and an AlignmentNet mapping (intermediate score,
dataset embedding) to the score scale of each dataset. The reference
dataset bypasses the AlignmentNet entirely.

It also defines the checkpoint format shared by every regimen.

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""
import json
import logging
from dataclasses import dataclass

import numpy as np

from .collection import DatasetIndicator
from .errors import ConfigurationError, IndicatorError, ShapeError
from .network import (ParamVector, GradientVector, LayerSpec, make_layout,
                      forward_trace, mlp_forward, backprop, check_finite)
from .alignment_curve import AlignmentCurve

logger = logging.getLogger(__name__)

DEFAULT_AUDIO_HIDDEN = (512, 512, 32)
DEFAULT_ALIGN_HIDDEN = (16, 16, 16, 16, 16)
DEFAULT_EMBEDDING_DIM = 10

CHECKPOINT_FORMAT = 'corpus-align-checkpoint'
CHECKPOINT_VERSION = 1


def audio_layout(feature_dim, hidden=DEFAULT_AUDIO_HIDDEN):
    """Layout of the AudioNet (ReLU MLP with a linear output)."""
    return make_layout((feature_dim,) + tuple(hidden) + (1,))


def align_layout(embedding_dim=DEFAULT_EMBEDDING_DIM,
                 hidden=DEFAULT_ALIGN_HIDDEN):
    """Layout of the AlignmentNet MLP: input is 1 + embedding_dim wide."""
    return make_layout((1 + embedding_dim,) + tuple(hidden) + (1,))


class EmbeddingTable(object):
    """One trainable row of dimension N per dataset."""

    def __init__(self, rows):
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        if rows.shape[0] < 1 or rows.shape[1] < 1:
            raise ShapeError('An embedding table needs at least one row '
                             'and one column, got shape %s' % (rows.shape,))
        self.rows = rows

    @property
    def dim(self):
        return self.rows.shape[1]

    def __len__(self):
        return self.rows.shape[0]

    @property
    def size(self):
        return self.rows.size

    def copy(self):
        return EmbeddingTable(self.rows.copy())

    # Flat view used by the optimizer
    @property
    def values(self):
        return self.rows.ravel()

    @property
    def layout(self):
        return ('embedding',) + self.rows.shape

    def same_layout(self, other):
        return self.layout == other.layout

    def with_values(self, values):
        return EmbeddingTable(np.asarray(values, dtype=np.float64)
                              .reshape(self.rows.shape))


class AudioNetModel(object):
    """
    A bare AudioNet, as trained by the individual, conventional,
    BAL and MDF regimens

    Its estimates do not depend on the dataset.
    """
    kind = 'audionet'

    def __init__(self, audio_params, dataset_names, reference_index=None,
                 scale_shift=None):
        self.audio_params = audio_params
        self.dataset_names = list(dataset_names)
        self.reference_index = reference_index
        # Per-dataset (scale, shift) learned by the BAL regimen, if any
        self.scale_shift = dict(scale_shift or {})

    @property
    def feature_dim(self):
        return self.audio_params.layout[0].in_width

    def estimate(self, features, dataset=None):
        """AudioNet output for every row of `features`."""
        return mlp_forward(self.audio_params, features)

    def total_param_count(self):
        return len(self.audio_params)

    def copy(self):
        return AudioNetModel(self.audio_params.copy(), self.dataset_names,
                             self.reference_index, self.scale_shift)


class AlignModel(object):
    """
    AudioNet + AlignmentNet + dataset embeddings

    Attributes
    ----------
    audio_params: ParamVector
        Maps features to intermediate scores

    align_params: ParamVector
        Maps [intermediate score, embedding] (1 + N columns) to a final score

    embeddings: EmbeddingTable
        One row per dataset

    reference_index: int
        The dataset whose alignment is forced to the identity

    dataset_names: list of str
        Names of the datasets, in indicator order
    """
    kind = 'alignnet'

    def __init__(self, audio_params, align_params, embeddings,
                 reference_index, dataset_names):
        self.audio_params = audio_params
        self.align_params = align_params
        if not isinstance(embeddings, EmbeddingTable):
            embeddings = EmbeddingTable(embeddings)
        self.embeddings = embeddings
        self.reference_index = int(reference_index)
        self.dataset_names = list(dataset_names)

        if align_params.layout[0].in_width != 1 + embeddings.dim:
            raise ShapeError(
                'The AlignmentNet input width (%d) must be 1 + the embedding '
                'dimension (%d)'
                % (align_params.layout[0].in_width, embeddings.dim))
        if align_params.layout[-1].out_width != 1:
            raise ShapeError('The AlignmentNet must have a single output')
        if len(embeddings) != len(self.dataset_names):
            raise ShapeError('%d embedding rows for %d datasets'
                             % (len(embeddings), len(self.dataset_names)))
        if not 0 <= self.reference_index < len(self.dataset_names):
            raise IndicatorError('Reference index %d out of range'
                                 % self.reference_index)

    @classmethod
    def initialize(cls, audio_params, dataset_names, reference_index, rng,
                   embedding_dim=DEFAULT_EMBEDDING_DIM,
                   align_hidden=DEFAULT_ALIGN_HIDDEN):
        """
        Attach a freshly initialized AlignmentNet to `audio_params`

        The AlignmentNet weights use the same uniform initialization as
        every dense stack; embeddings are drawn from a standard normal.
        """
        align_params = ParamVector.initialize(
            align_layout(embedding_dim, align_hidden), rng)
        rows = rng.standard_normal((len(dataset_names), embedding_dim))
        return cls(audio_params.copy(), align_params, EmbeddingTable(rows),
                   reference_index, dataset_names)

    @property
    def n_datasets(self):
        return len(self.dataset_names)

    @property
    def embedding_dim(self):
        return self.embeddings.dim

    @property
    def feature_dim(self):
        return self.audio_params.layout[0].in_width

    def indicator(self, dataset):
        """DatasetIndicator for a dataset name or index."""
        if isinstance(dataset, str):
            if dataset not in self.dataset_names:
                raise IndicatorError(
                    'The model has no alignment for dataset %r.\n'
                    'The known datasets are: \n - %s'
                    % (dataset, '\n - '.join(self.dataset_names)))
            index = self.dataset_names.index(dataset)
        else:
            index = int(dataset)
        if not 0 <= index < self.n_datasets:
            raise IndicatorError('Dataset index %d out of range [0, %d)'
                                 % (index, self.n_datasets))
        return DatasetIndicator(index, index == self.reference_index)

    def alignment_param_count(self):
        """Parameters of the AlignmentNet MLP plus the embedding table."""
        return len(self.align_params) + self.embeddings.size

    def total_param_count(self):
        return len(self.audio_params) + self.alignment_param_count()

    def estimate(self, features, dataset=None):
        """
        Final scores for `dataset`, or the intermediate (reference-scale)
        scores when no dataset is given
        """
        if dataset is None:
            return audionet_estimate(self, features)
        return alignnet_forward(self, features, self.indicator(dataset))

    def copy(self):
        return AlignModel(self.audio_params.copy(), self.align_params.copy(),
                          self.embeddings.copy(), self.reference_index,
                          self.dataset_names)


def _check_indicator(model, indicator):
    if not 0 <= indicator.index < model.n_datasets:
        raise IndicatorError('Dataset index %d out of range [0, %d)'
                             % (indicator.index, model.n_datasets))
    if indicator.is_reference != (indicator.index == model.reference_index):
        raise IndicatorError(
            'Indicator %d disagrees with the model about the reference '
            'dataset (reference index is %d)'
            % (indicator.index, model.reference_index))


def audionet_estimate(model, features):
    """
    Intermediate scores, one per row of `features`

    The scores are not clamped to [1, 5].
    """
    return mlp_forward(model.audio_params, features)


def _alignment_inputs(model, intermediate, index):
    rows = np.broadcast_to(model.embeddings.rows[index],
                           (intermediate.size, model.embedding_dim))
    return np.column_stack([intermediate, rows])


def align(model, intermediate, indicator):
    """
    Map intermediate scores to the score scale of one dataset

    For the reference dataset the AlignmentNet is not evaluated and the
    input is returned unchanged (bit for bit).

    Parameters
    ----------
    model: AlignModel

    intermediate: 1darray

    indicator: DatasetIndicator

    Returns
    -------
    A 1darray of final scores
    """
    _check_indicator(model, indicator)
    intermediate = np.array(intermediate, dtype=np.float64).ravel()
    if indicator.is_reference:
        return intermediate
    return mlp_forward(model.align_params,
                       _alignment_inputs(model, intermediate, indicator.index))


def alignnet_forward(model, features, indicator):
    """Full pipeline: AudioNet then alignment for `indicator`."""
    return align(model, audionet_estimate(model, features), indicator)


def sample_alignment_curve(model, indicator, score_grid, name=None):
    """
    Sample the learned alignment of one dataset on `score_grid`

    Parameters
    ----------
    model: AlignModel

    indicator: DatasetIndicator

    score_grid: 1darray, nonempty and sorted in ascending order.
        Its bounds should come from the intermediate scores observed on
        the dataset's training data.

    name: string, optional
        Dataset name recorded in the curve (defaults to the model's name)

    Returns
    -------
    An AlignmentCurve
    """
    grid = np.asarray(score_grid, dtype=np.float64).ravel()
    if grid.size == 0:
        raise ShapeError('The score grid is empty')
    if np.any(np.diff(grid) < 0):
        raise ConfigurationError('The score grid must be sorted in '
                                 'ascending order')
    aligned = align(model, grid, indicator)
    if name is None:
        name = model.dataset_names[indicator.index]
    return AlignmentCurve(name, grid, aligned,
                          is_reference=indicator.is_reference)


@dataclass
class ModelGradient:
    """Gradient of a loss with respect to every part of an AlignModel."""
    audio: GradientVector
    align: GradientVector
    embeddings: np.ndarray


def alignnet_backward(model, batch, indicator, loss_weight=1.):
    """
    Loss and gradient of `loss_weight * mse(alignnet_forward(...), targets)`
    with respect to the AudioNet, the AlignmentNet and the embeddings

    For the reference dataset the AlignmentNet and embedding gradients
    are zero.

    Returns
    -------
    A tuple with
       loss: float
       grads: ModelGradient
    """
    _check_indicator(model, indicator)
    audio_trace = forward_trace(model.audio_params, batch.inputs)
    intermediate = audio_trace.output[:, 0]
    n = intermediate.size
    align_grad = np.zeros(len(model.align_params))
    embedding_grad = np.zeros_like(model.embeddings.rows)
    if indicator.is_reference:
        residual = intermediate - batch.targets
        d_intermediate = residual[:, None]
    else:
        align_trace = forward_trace(
            model.align_params,
            _alignment_inputs(model, intermediate, indicator.index))
        residual = align_trace.output[:, 0] - batch.targets
        align_grad, d_inputs = backprop(model.align_params, align_trace,
                                        residual[:, None])
        d_intermediate = d_inputs[:, :1]
        embedding_grad[indicator.index] = d_inputs[:, 1:].sum(axis=0)
    audio_grad, _ = backprop(model.audio_params, audio_trace, d_intermediate)

    scale = 2. * loss_weight / n
    loss = loss_weight * float(np.mean(residual ** 2))
    check_finite(loss, 'loss')
    grads = ModelGradient(
        GradientVector(model.audio_params.layout, audio_grad * scale),
        GradientVector(model.align_params.layout, align_grad * scale),
        embedding_grad * scale)
    check_finite(grads.audio.values, 'AudioNet gradient')
    check_finite(grads.align.values, 'AlignmentNet gradient')
    check_finite(grads.embeddings, 'embedding gradient')
    return loss, grads


# Checkpoints
# -----------

def _params_to_dict(params):
    return {'layout': [[layer.in_width, layer.out_width, layer.activation]
                       for layer in params.layout],
            'values': params.values.tolist()}


def _params_from_dict(d):
    layout = tuple(LayerSpec(int(i), int(o), str(a)) for i, o, a in d['layout'])
    return ParamVector(layout, d['values'])


def checkpoint_to_dict(model, regimen=None):
    """Self-describing dictionary holding every value of `model`."""
    d = {'format': CHECKPOINT_FORMAT,
         'version': CHECKPOINT_VERSION,
         'kind': model.kind,
         'regimen': regimen,
         'datasets': {name: i for i, name in enumerate(model.dataset_names)},
         'reference_index': model.reference_index,
         'audio': _params_to_dict(model.audio_params)}
    if model.kind == 'alignnet':
        d['align'] = _params_to_dict(model.align_params)
        d['embeddings'] = model.embeddings.rows.tolist()
    else:
        d['scale_shift'] = {name: [float(a), float(b)]
                            for name, (a, b) in model.scale_shift.items()}
    return d


def checkpoint_from_dict(d):
    """Inverse of `checkpoint_to_dict`."""
    if d.get('format') != CHECKPOINT_FORMAT:
        raise ConfigurationError('Not a corpus-align checkpoint')
    if d.get('version') != CHECKPOINT_VERSION:
        raise ConfigurationError('Unsupported checkpoint version %r'
                                 % d.get('version'))
    index = d['datasets']
    names = sorted(index, key=lambda name: index[name])
    audio_params = _params_from_dict(d['audio'])
    if d['kind'] == 'alignnet':
        return AlignModel(audio_params, _params_from_dict(d['align']),
                          EmbeddingTable(d['embeddings']),
                          d['reference_index'], names)
    elif d['kind'] == 'audionet':
        scale_shift = {name: tuple(ab)
                       for name, ab in d.get('scale_shift', {}).items()}
        return AudioNetModel(audio_params, names, d['reference_index'],
                             scale_shift)
    raise ConfigurationError('Unknown checkpoint kind %r' % d['kind'])


def save_checkpoint(model, path, regimen=None):
    """
    Write `model` as JSON text

    Floats are written with their shortest round-trip representation and
    keys are sorted, so that identical models give identical files.
    """
    text = json.dumps(checkpoint_to_dict(model, regimen), sort_keys=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(text + '\n')
    logger.info('Wrote %s checkpoint to %s', model.kind, path)


def load_checkpoint(path):
    """Read a checkpoint written by `save_checkpoint`."""
    with open(path, encoding='utf-8') as f:
        try:
            d = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigurationError('Checkpoint %s is not valid JSON: %s'
                                     % (path, e))
    return checkpoint_from_dict(d)
