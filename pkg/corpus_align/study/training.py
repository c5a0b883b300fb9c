"""
This file is part of corpus-align.

It defines the training regimens (individual, conventional pooled training,
bias-aware loss, multi-dataset finetuning with or without an AlignmentNet),
the per-dataset-weighted loss they share, and the epoch loop with
validation-based early stopping.

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""
import json
import logging
import math
import warnings
from dataclasses import dataclass, field, fields, asdict
from enum import Enum

import numpy as np
from tqdm import tqdm

from .collection import DatasetIndicator
from .errors import ConfigurationError, ShapeError, UndefinedCorrelationError
from .metrics import lcc
from .model import (AudioNetModel, AlignModel, EmbeddingTable, audio_layout,
                    alignnet_forward, alignnet_backward, load_checkpoint,
                    DEFAULT_AUDIO_HIDDEN, DEFAULT_ALIGN_HIDDEN,
                    DEFAULT_EMBEDDING_DIM)
from .network import (ParamVector, GradientVector, OPTIMIZERS, backward,
                      backprop, forward_trace, mlp_forward, mse, check_finite,
                      init_optimizer, optimizer_step)
from .utilities import stream_seed

logger = logging.getLogger(__name__)


class RegimenKind(str, Enum):
    """The training regimens that can be compared."""
    INDIVIDUAL = 'individual'
    ALL = 'all'
    ALL_BAL = 'all-bal'
    ALL_MDF = 'all-mdf'
    ALL_MDF_ALIGNNET = 'all-mdf-alignnet'

    @classmethod
    def parse(cls, name):
        """Accept both 'all-mdf' and 'all_mdf' spellings."""
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace('_', '-')
        for kind in cls:
            if kind.value == key:
                return kind
        raise ConfigurationError(
            'Unknown regimen %r.\nThe available regimens are: \n - %s'
            % (name, '\n - '.join(k.value for k in cls)))

    @property
    def uses_alignnet(self):
        return self is RegimenKind.ALL_MDF_ALIGNNET


@dataclass
class TrainConfig:
    """
    Hyper-parameters of every regimen

    Attributes
    ----------
    epochs_pretrain: int
        Epoch budget of the pretraining and individual regimens

    epochs_finetune: int
        Epoch budget of the finetuning, conventional and BAL regimens

    freeze_epochs: int
        Number of initial finetuning epochs during which the AudioNet is
        not updated (AlignNet finetuning only)

    batch_size: int
        Rows drawn from each dataset at every optimizer step

    step_size: float

    r_th: float
        Training LCC above which the BAL scale/shift terms are activated

    seed: int

    patience: int
        Epochs without validation improvement before stopping

    optimizer: 'adam' or 'sgd'

    audio_hidden: tuple of hidden-layer widths of the AudioNet
        The default (512, 512, 32) is wider than a desk-scale (64, 64, 32)
        network, so that the AlignmentNet and embeddings (1337 parameters
        with four datasets) stay below 0.5% of the whole model (about
        0.46% with 16 features). Pass (64, 64, 32) for faster runs; the
        AlignmentNet share is then about 15%.

    align_hidden: tuple of hidden-layer widths of the AlignmentNet

    embedding_dim: int

    show_progress: bool
        Display a progress bar over epochs
    """
    epochs_pretrain: int = 300
    epochs_finetune: int = 300
    freeze_epochs: int = 1
    batch_size: int = 32
    step_size: float = 1e-3
    r_th: float = 0.6
    seed: int = 0
    patience: int = 30
    optimizer: str = 'adam'
    audio_hidden: tuple = DEFAULT_AUDIO_HIDDEN
    align_hidden: tuple = DEFAULT_ALIGN_HIDDEN
    embedding_dim: int = DEFAULT_EMBEDDING_DIM
    show_progress: bool = False

    def __post_init__(self):
        self.audio_hidden = tuple(int(w) for w in self.audio_hidden)
        self.align_hidden = tuple(int(w) for w in self.align_hidden)
        self.validate()

    def validate(self):
        """Raise a ConfigurationError if a value is out of range."""
        problems = []
        if self.epochs_pretrain < 1 or self.epochs_finetune < 1:
            problems.append('epoch budgets must be at least 1')
        if self.freeze_epochs < 0:
            problems.append('freeze_epochs must be >= 0')
        if self.batch_size < 1:
            problems.append('batch_size must be >= 1')
        if not self.step_size > 0:
            problems.append('step_size must be positive')
        if not 0. < self.r_th <= 1.:
            problems.append('r_th must lie in (0, 1]')
        if self.patience < 0:
            problems.append('patience must be >= 0')
        if self.optimizer not in OPTIMIZERS:
            problems.append('optimizer must be one of %s'
                            % ', '.join(OPTIMIZERS))
        if self.embedding_dim < 1:
            problems.append('embedding_dim must be >= 1')
        if problems:
            raise ConfigurationError('Invalid training configuration: %s'
                                     % '; '.join(problems))

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        for key in d:
            if key not in known:
                raise ConfigurationError('unknown config key: %s' % key)
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path, encoding='utf-8') as f:
            try:
                d = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigurationError('Config %s is not valid JSON: %s'
                                         % (path, e))
        return cls.from_dict(d)

    def to_dict(self):
        d = asdict(self)
        d['audio_hidden'] = list(self.audio_hidden)
        d['align_hidden'] = list(self.align_hidden)
        return d


@dataclass(frozen=True)
class ScaleShift:
    """Per-dataset affine map a * estimate + b used by the BAL regimen."""
    a: float = 1.
    b: float = 0.
    degenerate: bool = False

    @classmethod
    def identity(cls):
        return cls()

    @property
    def is_identity(self):
        return self.a == 1. and self.b == 0.

    def __call__(self, estimates):
        return self.a * np.asarray(estimates, dtype=np.float64) + self.b


def weighted_loss(per_dataset):
    """
    Mean over datasets of the per-dataset MSE, so that every dataset
    carries the same weight whatever its size

    Parameters
    ----------
    per_dataset: list of (targets, estimates) pairs

    Returns
    -------
    A float
    """
    per_dataset = list(per_dataset)
    if len(per_dataset) == 0:
        raise ShapeError('weighted_loss needs at least one dataset')
    losses = [mse(estimates, targets) for targets, estimates in per_dataset]
    return float(sum(losses) / len(losses))


def ls_fit_scale_shift(targets, estimates):
    """
    Least-squares (a, b) minimizing sum (targets - (a * estimates + b))^2

    When the estimates have no variance the fit is undefined; the identity
    is returned (flagged as degenerate) and a warning is emitted.
    """
    y = np.asarray(targets, dtype=np.float64).ravel()
    e = np.asarray(estimates, dtype=np.float64).ravel()
    if y.size != e.size:
        raise ShapeError('Lengths differ (%d vs %d)' % (y.size, e.size))
    if y.size < 2:
        raise ShapeError('A scale/shift fit needs at least 2 points')
    ec = e - e.mean()
    see = float(np.dot(ec, ec))
    if see == 0. or np.all(e == e[0]):
        warnings.warn('The estimates have zero variance; using the identity '
                      'scale/shift', UserWarning)
        return ScaleShift(1., 0., degenerate=True)
    a = float(np.dot(ec, y - y.mean())) / see
    b = float(y.mean() - a * e.mean())
    check_finite([a, b], 'scale/shift')
    return ScaleShift(a, b)


class TrainingLog(object):
    """
    Per-epoch records of a training run, written as JSON lines
    """

    def __init__(self):
        self.records = []

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def append(self, **record):
        self.records.append(record)
        logger.debug('%s', json.dumps(record, sort_keys=True))

    def extend(self, other):
        self.records.extend(other.records)

    def stage(self, name):
        """Records of one stage ('pretrain', 'finetune', ...)."""
        return [r for r in self.records if r['stage'] == name]

    def to_jsonl(self):
        return ''.join(json.dumps(r, sort_keys=True) + '\n'
                       for r in self.records)

    def write(self, path):
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(self.to_jsonl())


@dataclass
class TrainingResult:
    """
    Outcome of a regimen: the best-validation model and its history

    bal_activation_epoch is the first epoch whose training LCC exceeded
    r_th (BAL only; None otherwise or if it never happened).
    """
    model: object
    log: TrainingLog
    best_epoch: int
    epochs_run: int
    best_val_loss: float
    bal_activation_epoch: int = None
    scale_shift: dict = field(default_factory=dict)


def initial_audio_params(feature_dim, config):
    """Freshly initialized AudioNet parameters for `config`."""
    rng = np.random.default_rng(stream_seed(config.seed, 'audionet-init'))
    return ParamVector.initialize(
        audio_layout(feature_dim, config.audio_hidden), rng)


def _audio_backward(params, batch, loss_weight, transform=None):
    """
    Loss and gradient values of loss_weight * mse(a * f(x) + b, y)
    (plain `backward` when no transform is given)
    """
    if transform is None:
        loss, grads = backward(params, batch, loss_weight)
        return loss, grads.values
    trace = forward_trace(params, batch.inputs)
    residual = transform.a * trace.output[:, 0] + transform.b - batch.targets
    loss = loss_weight * float(np.mean(residual ** 2))
    check_finite(loss, 'loss')
    raw, _ = backprop(params, trace, (transform.a * residual)[:, None])
    grads = raw * (2. * loss_weight / residual.size)
    check_finite(grads, 'gradient')
    return loss, grads


def _final_estimates(model, features, indicator, transform=None):
    if isinstance(model, AlignModel):
        return alignnet_forward(model, features, indicator)
    estimates = mlp_forward(model.audio_params, features)
    if transform is not None:
        estimates = transform(estimates)
    return estimates


def _pooled_lcc(targets, estimates):
    try:
        return lcc(np.concatenate(targets), np.concatenate(estimates))
    except (UndefinedCorrelationError, ShapeError):
        return None


def epoch_loop(model, datasets, indicators, config, epochs, stage='train',
               regimen=None, freeze_epochs=0, bal=False, log=None,
               step_callback=None):
    """
    Train `model` on `datasets` with the per-dataset-weighted loss

    Each optimizer step draws one minibatch from every dataset and sums
    the per-dataset MSE terms, each weighted by 1 / number of datasets,
    in dataset order. An epoch lasts until the largest training split has
    been seen once; smaller splits cycle. After every epoch the weighted
    validation loss is computed and the best model is kept; training stops
    after `config.patience` epochs without improvement.

    Parameters
    ----------
    model: AudioNetModel or AlignModel
        Trained in place on a private copy

    datasets: list of RatedDataset, in indicator order

    indicators: list of DatasetIndicator, one per dataset

    config: TrainConfig

    epochs: int
        Maximal number of epochs

    stage, regimen: strings recorded in the log

    freeze_epochs: int
        The AudioNet is not updated during the first `freeze_epochs`
        epochs (AlignModel only)

    bal: bool
        Enable the bias-aware loss: once the pooled training LCC exceeds
        `config.r_th`, a scale and shift is refit for every non-reference
        dataset after each epoch and used in its loss term

    log: TrainingLog, optional
        Records are appended to it

    step_callback: callable, optional
        Called as step_callback(epoch, step, model, frozen) after each step

    Returns
    -------
    A TrainingResult
    """
    if len(datasets) == 0 or len(datasets) != len(indicators):
        raise ShapeError('One indicator is needed per dataset')
    model = model.copy()
    use_align = isinstance(model, AlignModel)
    if log is None:
        log = TrainingLog()
    rng = np.random.default_rng(config.seed)
    weight = 1. / len(datasets)
    train = [d.train for d in datasets]
    if any(len(s) == 0 for s in train):
        raise ShapeError('Every dataset needs a nonempty training split')
    validation = [d.validation for d in datasets]
    if all(len(s) == 0 for s in validation):
        logger.warning('No validation rows; selecting on the training loss')
        validation = train
    steps = int(math.ceil(max(len(s) for s in train) / config.batch_size))

    audio_state = init_optimizer(model.audio_params, config.optimizer)
    if use_align:
        align_state = init_optimizer(model.align_params, config.optimizer)
        emb_state = init_optimizer(model.embeddings, config.optimizer)

    transforms = [None] * len(datasets)
    bal_active = False
    activation_epoch = None
    best = (math.inf, None, 0, list(transforms))
    since_best = 0
    epoch = 0
    for epoch in tqdm(range(1, epochs + 1), desc=stage,
                      disable=not config.show_progress):
        frozen = use_align and epoch <= freeze_epochs
        orders = [rng.permutation(len(s)) for s in train]
        loss_sums = np.zeros(len(datasets))
        for step in range(steps):
            audio_grad = np.zeros(len(model.audio_params))
            if use_align:
                align_grad = np.zeros(len(model.align_params))
                emb_grad = np.zeros_like(model.embeddings.rows)
            for d, (split, order) in enumerate(zip(train, orders)):
                size = min(config.batch_size, len(split))
                rows = order[(step * config.batch_size + np.arange(size))
                             % len(split)]
                batch = split.batch(rows, indicators[d].index)
                if use_align:
                    loss, grads = alignnet_backward(model, batch,
                                                    indicators[d], weight)
                    audio_grad += grads.audio.values
                    align_grad += grads.align.values
                    emb_grad += grads.embeddings
                else:
                    loss, grads = _audio_backward(model.audio_params, batch,
                                                  weight, transforms[d])
                    audio_grad += grads
                loss_sums[d] += loss / weight
            if not frozen:
                model.audio_params, audio_state = optimizer_step(
                    model.audio_params,
                    GradientVector(model.audio_params.layout, audio_grad),
                    audio_state, config.step_size)
            if use_align:
                model.align_params, align_state = optimizer_step(
                    model.align_params,
                    GradientVector(model.align_params.layout, align_grad),
                    align_state, config.step_size)
                model.embeddings, emb_state = optimizer_step(
                    model.embeddings, EmbeddingTable(emb_grad), emb_state,
                    config.step_size)
            if step_callback is not None:
                step_callback(epoch, step, model, frozen)

        # Pooled training LCC on untransformed estimates
        train_estimates = [
            _final_estimates(model, s.features, ind) for s, ind
            in zip(train, indicators)]
        train_lcc = _pooled_lcc([s.scores for s in train], train_estimates)
        if bal:
            if not bal_active and train_lcc is not None \
                    and train_lcc > config.r_th:
                bal_active = True
                activation_epoch = epoch
                logger.info('BAL activated at epoch %d (training LCC %.4f)',
                            epoch, train_lcc)
            if bal_active:
                transforms = [
                    None if ind.is_reference
                    else ls_fit_scale_shift(s.scores, est)
                    for s, est, ind in zip(train, train_estimates, indicators)]

        val_estimates = [
            _final_estimates(model, s.features, ind, t) for s, ind, t
            in zip(validation, indicators, transforms) if len(s) > 0]
        val_targets = [s.scores for s in validation if len(s) > 0]
        val_loss = weighted_loss(zip(val_targets, val_estimates))
        val_lcc = _pooled_lcc(val_targets, val_estimates)

        if val_loss < best[0]:
            best = (val_loss, model.copy(), epoch, list(transforms))
            since_best = 0
        else:
            since_best += 1
        log.append(
            regimen=regimen, stage=stage, epoch=epoch,
            train_loss={d.name: float(loss_sums[i] / steps)
                        for i, d in enumerate(datasets)},
            val_loss=val_loss, val_lcc=val_lcc, train_lcc=train_lcc,
            frozen=frozen, bal_active=bal_active,
            scale_shift={d.name: [t.a, t.b] for d, t
                         in zip(datasets, transforms) if t is not None})
        if since_best >= config.patience:
            logger.info('%s: no improvement for %d epoch(s), stopping at '
                        'epoch %d', stage, since_best, epoch)
            break

    best_loss, best_model, best_epoch, best_transforms = best
    scale_shift = {d.name: (t.a, t.b)
                   for d, t in zip(datasets, best_transforms) if t is not None}
    if not use_align and bal:
        best_model.scale_shift = scale_shift
    logger.info('%s: best validation loss %.6g at epoch %d of %d',
                stage, best_loss, best_epoch, epoch)
    return TrainingResult(best_model, log, best_epoch, epoch, best_loss,
                          activation_epoch, scale_shift)


def _single_dataset_loop(audio_params, dataset, config, stage, regimen, log,
                         step_callback):
    reference_index = 0 if dataset.is_reference else None
    model = AudioNetModel(audio_params, [dataset.name], reference_index)
    indicator = DatasetIndicator(0, dataset.is_reference)
    return epoch_loop(model, [dataset], [indicator], config,
                      config.epochs_pretrain, stage=stage, regimen=regimen,
                      log=log, step_callback=step_callback)


def pretrain(audio_params, reference_dataset, config, log=None,
             step_callback=None):
    """
    Train a bare AudioNet on the reference dataset alone

    Returns
    -------
    A TrainingResult whose model is an AudioNetModel that knows the name
    of the dataset it was pretrained on
    """
    if not reference_dataset.is_reference:
        raise ConfigurationError('Dataset %s is not marked as reference'
                                 % reference_dataset.name)
    return _single_dataset_loop(audio_params, reference_dataset, config,
                                'pretrain', RegimenKind.ALL_MDF.value, log,
                                step_callback)


def train_individual(audio_params, dataset, config, log=None,
                     step_callback=None):
    """Train a bare AudioNet on a single, arbitrary dataset."""
    return _single_dataset_loop(audio_params, dataset, config, 'individual',
                                RegimenKind.INDIVIDUAL.value, log,
                                step_callback)


def _collection_indicators(collection):
    return [collection.indicator(i) for i in range(len(collection))]


def train_conventional(audio_params, collection, config, log=None,
                       step_callback=None):
    """
    Train one AudioNet on every dataset at once, without dataset
    indicators
    """
    model = AudioNetModel(audio_params, collection.names,
                          collection.reference_index)
    return epoch_loop(model, list(collection), _collection_indicators(collection),
                      config, config.epochs_finetune, stage='conventional',
                      regimen=RegimenKind.ALL.value, log=log,
                      step_callback=step_callback)


def train_bal(audio_params, collection, config, log=None, step_callback=None):
    """
    Conventional training with the bias-aware loss: after the pooled
    training LCC first exceeds `config.r_th`, every non-reference dataset
    gets a least-squares scale and shift, refit after each epoch, inside
    its loss term. The reference dataset keeps the identity.
    """
    model = AudioNetModel(audio_params, collection.names,
                          collection.reference_index)
    return epoch_loop(model, list(collection), _collection_indicators(collection),
                      config, config.epochs_finetune, stage='bal',
                      regimen=RegimenKind.ALL_BAL.value, bal=True, log=log,
                      step_callback=step_callback)


def finetune_mdf(checkpoint, collection, config, with_alignnet, log=None,
                 step_callback=None):
    """
    Finetune a pretrained AudioNet on every dataset at once

    Parameters
    ----------
    checkpoint: AudioNetModel, AlignModel, or path to a checkpoint file
        The pretrained model; its reference dataset must be the
        collection's reference

    collection: DatasetCollection

    config: TrainConfig

    with_alignnet: bool
        Attach a freshly initialized AlignmentNet and dataset embeddings.
        The AudioNet is then frozen for `config.freeze_epochs` epochs.
        Without AlignmentNet no epoch is frozen.

    Returns
    -------
    A TrainingResult; the optimizer state is not carried over from
    pretraining
    """
    if isinstance(checkpoint, (str, bytes)) or hasattr(checkpoint,
                                                       '__fspath__'):
        checkpoint = load_checkpoint(checkpoint)
    if checkpoint.reference_index is None:
        raise ConfigurationError('The checkpoint has no reference dataset')
    pretrained_on = checkpoint.dataset_names[checkpoint.reference_index]
    if pretrained_on != collection.reference.name:
        raise ConfigurationError(
            'The checkpoint was pretrained on %r but the reference dataset '
            'of the collection is %r'
            % (pretrained_on, collection.reference.name))
    if checkpoint.feature_dim != collection.feature_dim:
        raise ShapeError('The checkpoint expects %d features, the collection '
                         'has %d' % (checkpoint.feature_dim,
                                     collection.feature_dim))

    indicators = _collection_indicators(collection)
    if with_alignnet:
        rng = np.random.default_rng(stream_seed(config.seed, 'alignnet-init'))
        model = AlignModel.initialize(
            checkpoint.audio_params, collection.names,
            collection.reference_index, rng, config.embedding_dim,
            config.align_hidden)
        regimen = RegimenKind.ALL_MDF_ALIGNNET.value
        freeze = config.freeze_epochs
    else:
        model = AudioNetModel(checkpoint.audio_params.copy(), collection.names,
                              collection.reference_index)
        regimen = RegimenKind.ALL_MDF.value
        freeze = 0
    return epoch_loop(model, list(collection), indicators, config,
                      config.epochs_finetune, stage='finetune',
                      regimen=regimen, freeze_epochs=freeze, log=log,
                      step_callback=step_callback)


def train_regimen(kind, collection, config, dataset=None, audio_params=None):
    """
    Run a complete regimen on `collection`

    Parameters
    ----------
    kind: RegimenKind or its name

    collection: DatasetCollection

    config: TrainConfig

    dataset: string
        Name of the dataset to train on (individual regimen only)

    audio_params: ParamVector, optional
        Initial AudioNet parameters (drawn from the seed by default)

    Returns
    -------
    A TrainingResult; for the MDF regimens the log holds both the
    pretraining and the finetuning records
    """
    kind = RegimenKind.parse(kind)
    if audio_params is None:
        audio_params = initial_audio_params(collection.feature_dim, config)
    log = TrainingLog()
    if kind is RegimenKind.INDIVIDUAL:
        if dataset is None:
            raise ConfigurationError('The individual regimen needs a dataset')
        return train_individual(audio_params, collection[dataset], config,
                                log)
    if dataset is not None:
        raise ConfigurationError('--dataset only applies to the individual '
                                 'regimen')
    if kind is RegimenKind.ALL:
        return train_conventional(audio_params, collection, config, log)
    if kind is RegimenKind.ALL_BAL:
        return train_bal(audio_params, collection, config, log)
    pretrained = pretrain(audio_params, collection.reference, config, log)
    return finetune_mdf(pretrained.model, collection, config,
                        kind.uses_alignnet, log)
