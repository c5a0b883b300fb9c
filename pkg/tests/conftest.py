"""
This file is part of corpus-align.

It defines the pytest options and the small fixtures shared by the tests.
Tests marked `slow` only run with `py.test --runslow`.

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""
import json

import numpy as np
import pytest

from corpus_align.study.collection import RatedDataset, DatasetCollection
from corpus_align.study.training import TrainConfig


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='also run the tests marked as slow')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: end-to-end runs on the '
                            'benchmark collection')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


def linear_dataset(name, n, weights, offset, scale=1., shift=0.,
                   is_reference=False, seed=0, split='all'):
    """
    Dataset whose targets are scale * (offset + x . weights) + shift,
    with x uniform in [-1, 1]^d
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1., 1., size=(n, len(weights)))
    y = scale * (offset + x @ np.asarray(weights)) + shift
    return RatedDataset(name, x, y, is_reference=is_reference, split=split)


@pytest.fixture
def tiny_config():
    """Small networks that train in a fraction of a second."""
    return TrainConfig(epochs_pretrain=5, epochs_finetune=5, batch_size=16,
                       step_size=1e-2, patience=5, audio_hidden=(8,),
                       align_hidden=(4, 4), embedding_dim=2)


@pytest.fixture
def small_collection():
    """Three datasets sharing one underlying linear function."""
    weights = (0.8, -0.5, 0.3)
    return DatasetCollection([
        linear_dataset('ref', 60, weights, 3., is_reference=True, seed=1,
                       split=None),
        linear_dataset('exp_a', 40, weights, 3., scale=0.5, shift=1.,
                       seed=2, split=None),
        linear_dataset('exp_b', 30, weights, 3., scale=0.8, shift=0.2,
                       seed=3, split=None)])


TINY_SIMULATION = {
    'seed': 3,
    'feature_dim': 4,
    'common_fraction': 0.2,
    'experiments': [
        {'name': 'ref', 'n_files': 60, 'votes_per_file': 4, 'severity': 0.,
         'vote_noise_sd': 0.5, 'condition_range': [1., 5.],
         'feature_noise_sd': 0.05, 'is_reference': True},
        {'name': 'exp_a', 'n_files': 40, 'votes_per_file': 4,
         'severity': 0.5, 'vote_noise_sd': 0.5, 'condition_range': [1., 4.],
         'feature_noise_sd': 0.05, 'is_reference': False},
        {'name': 'exp_b', 'n_files': 40, 'votes_per_file': 4,
         'severity': 0.8, 'vote_noise_sd': 0.5, 'condition_range': [2., 5.],
         'feature_noise_sd': 0.05, 'is_reference': False}]}


@pytest.fixture
def tiny_simulation(tmp_path):
    """Path to a small simulation config."""
    path = tmp_path / 'simulation.json'
    path.write_text(json.dumps(TINY_SIMULATION))
    return str(path)


@pytest.fixture
def tiny_train_config(tmp_path):
    """Path to a training config for the tiny networks."""
    path = tmp_path / 'train.json'
    path.write_text(json.dumps({
        'epochs_pretrain': 3, 'epochs_finetune': 3, 'batch_size': 16,
        'step_size': 1e-2, 'patience': 3, 'audio_hidden': [8],
        'align_hidden': [4, 4], 'embedding_dim': 2}))
    return str(path)
