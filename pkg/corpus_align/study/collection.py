"""
This file is part of corpus-align.

It defines the rated datasets used for training and evaluation,
and the DatasetCollection that owns the dataset-indicator mapping.

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, IndicatorError, ShapeError
from .network import Batch, check_finite
from .utilities import stream_seed

SPLITS = ('train', 'validation', 'test')
SPLIT_FRACTIONS = (0.8, 0.1, 0.1)


def split_indices(n, seed, name):
    """
    Deterministic 80/10/10 split of `n` rows

    The permutation only depends on (`seed`, `name`), so that every
    regimen trained on the same dataset sees the same split.

    Returns
    -------
    A dictionary {'train': ..., 'validation': ..., 'test': ...}
    of sorted 1darrays of row indices
    """
    rng = np.random.default_rng(stream_seed(seed, 'split:' + name))
    perm = rng.permutation(n)
    n_train = int(round(SPLIT_FRACTIONS[0] * n))
    n_val = int(round(SPLIT_FRACTIONS[1] * n))
    return {'train': np.sort(perm[:n_train]),
            'validation': np.sort(perm[n_train:n_train + n_val]),
            'test': np.sort(perm[n_train + n_val:])}


@dataclass(frozen=True)
class DatasetIndicator:
    """Categorical indicator of the dataset a score comes from."""
    index: int
    is_reference: bool


@dataclass
class RatedSplit:
    """Rows of one split of one dataset."""
    name: str
    features: np.ndarray
    scores: np.ndarray
    file_ids: tuple

    def __len__(self):
        return self.scores.size

    def batch(self, rows=None, dataset_index=0):
        """Batch of the requested rows (all rows by default)."""
        if rows is None:
            return Batch(self.features, self.scores, dataset_index)
        return Batch(self.features[rows], self.scores[rows], dataset_index)


class RatedDataset(object):
    """
    The subjective scores of one listening experiment

    Attributes
    ----------
    name: string

    features: 2darray (one row per file)

    scores: 1darray of mean opinion scores

    file_ids: tuple of strings

    is_reference: bool

    split: dict
        Row indices of the 'train', 'validation' and 'test' splits
    """

    def __init__(self, name, features, scores, file_ids=None,
                 is_reference=False, split=None, seed=0):
        """
        Parameters
        ----------
        split: dict, 'all' or None
            Explicit row indices per split; 'all' puts every row in
            every split (small hand-made fixtures); None draws the
            deterministic 80/10/10 split from (`seed`, `name`).
        """
        self.name = str(name)
        self.features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        self.scores = np.asarray(scores, dtype=np.float64).ravel()
        n = self.scores.size
        if self.features.shape[0] != n:
            raise ShapeError(
                'Dataset %s has %d feature rows but %d scores'
                % (self.name, self.features.shape[0], n))
        if n == 0:
            raise ShapeError('Dataset %s is empty' % self.name)
        check_finite(self.scores, 'scores in dataset %s' % self.name)
        check_finite(self.features, 'features in dataset %s' % self.name)
        if file_ids is None:
            file_ids = ['%s-%05d' % (self.name, i) for i in range(n)]
        self.file_ids = tuple(str(f) for f in file_ids)
        if len(self.file_ids) != n:
            raise ShapeError('Dataset %s has %d file ids for %d scores'
                             % (self.name, len(self.file_ids), n))
        self.is_reference = bool(is_reference)

        if split is None:
            split = split_indices(n, seed, self.name)
        elif isinstance(split, str) and split == 'all':
            split = {key: np.arange(n) for key in SPLITS}
        self.split = {key: np.asarray(split[key], dtype=int) for key in SPLITS}

    def __len__(self):
        return self.scores.size

    @property
    def feature_dim(self):
        return self.features.shape[1]

    def subset(self, split):
        """Return the RatedSplit `split` ('train', 'validation' or 'test')."""
        if split not in SPLITS:
            raise ConfigurationError(
                'Unknown split %r.\nThe available splits are: %s'
                % (split, ', '.join(SPLITS)))
        rows = self.split[split]
        return RatedSplit(self.name, self.features[rows], self.scores[rows],
                          tuple(self.file_ids[i] for i in rows))

    @property
    def train(self):
        return self.subset('train')

    @property
    def validation(self):
        return self.subset('validation')

    @property
    def test(self):
        return self.subset('test')


class DatasetCollection(object):
    """
    Ordered set of datasets with exactly one reference

    The position of a dataset in the collection is its indicator index.
    """

    def __init__(self, datasets):
        self.datasets = list(datasets)
        if len(self.datasets) == 0:
            raise ConfigurationError('A collection needs at least one dataset')
        names = [d.name for d in self.datasets]
        if len(set(names)) != len(names):
            raise ConfigurationError('Dataset names must be unique: %s'
                                     % ', '.join(names))
        references = [i for i, d in enumerate(self.datasets) if d.is_reference]
        if len(references) != 1:
            raise ConfigurationError(
                'Exactly one dataset must be marked as reference, found %d'
                % len(references))
        self.reference_index = references[0]
        dims = set(d.feature_dim for d in self.datasets)
        if len(dims) != 1:
            raise ShapeError('All datasets must share one feature dimension, '
                             'found %s' % sorted(dims))

    def __len__(self):
        return len(self.datasets)

    def __iter__(self):
        return iter(self.datasets)

    def __getitem__(self, key):
        if isinstance(key, str):
            return self.datasets[self.index_of(key)]
        return self.datasets[key]

    @property
    def names(self):
        return [d.name for d in self.datasets]

    @property
    def reference(self):
        return self.datasets[self.reference_index]

    @property
    def feature_dim(self):
        return self.datasets[0].feature_dim

    def index_of(self, name):
        for i, d in enumerate(self.datasets):
            if d.name == name:
                return i
        raise IndicatorError(
            'Unknown dataset %r.\nThe available datasets are: \n - %s'
            % (name, '\n - '.join(self.names)))

    def indicator(self, key):
        """DatasetIndicator for a dataset name or index."""
        index = self.index_of(key) if isinstance(key, str) else int(key)
        if not 0 <= index < len(self.datasets):
            raise IndicatorError('Dataset index %d out of range [0, %d)'
                                 % (index, len(self.datasets)))
        return DatasetIndicator(index, index == self.reference_index)
