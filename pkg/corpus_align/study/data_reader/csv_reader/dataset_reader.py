"""
This file is part of corpus-align.

It defines the functions that read and write one rated dataset as CSV:
header `file_id,score,f0,...,f{D-1}`, UTF-8, LF line endings, numbers
written with 17 significant digits so that a round trip is exact.

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""
import csv

import numpy as np

from ...errors import ConfigurationError, ShapeError
from ...utilities import format_float


def write_dataset_csv(path, dataset):
    """
    Write the file ids, scores and features of `dataset`

    Latent qualities are never part of this format.
    """
    header = ['file_id', 'score'] + ['f%d' % k
                                     for k in range(dataset.feature_dim)]
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for file_id, score, row in zip(dataset.file_ids, dataset.scores,
                                       dataset.features):
            writer.writerow([file_id, format_float(score)]
                            + [format_float(x) for x in row])


def read_dataset_csv(path, feature_dim=None):
    """
    Read a dataset CSV

    Parameters
    ----------
    path: string

    feature_dim: int, optional
        Expected number of feature columns

    Returns
    -------
    A tuple with
       file_ids: list of strings
       scores: 1darray
       features: 2darray
    """
    with open(path, encoding='utf-8', newline='') as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or header[:2] != ['file_id', 'score']:
            raise ConfigurationError('%s: the header must start with '
                                     'file_id,score' % path)
        n_features = len(header) - 2
        if header[2:] != ['f%d' % k for k in range(n_features)]:
            raise ConfigurationError('%s: feature columns must be named '
                                     'f0, f1, ...' % path)
        if feature_dim is not None and n_features != feature_dim:
            raise ShapeError('%s has %d feature columns, expected %d'
                             % (path, n_features, feature_dim))
        file_ids, scores, features = [], [], []
        for line, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ShapeError('%s, line %d: expected %d columns, got %d'
                                 % (path, line, len(header), len(row)))
            try:
                values = [float(x) for x in row[1:]]
            except ValueError as e:
                raise ConfigurationError('%s, line %d: %s' % (path, line, e))
            file_ids.append(row[0])
            scores.append(values[0])
            features.append(values[1:])
    return (file_ids, np.array(scores),
            np.array(features, dtype=np.float64).reshape(-1, n_features))
