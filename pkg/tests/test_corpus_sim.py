"""
This test file is part of corpus-align.

It checks the synthetic listening-test simulator: latent qualities,
corpus-effect distortions, vote aggregation, feature synthesis and the
assembly of a collection with shared files.

Usage:
This file is meant to be run from the root directory of corpus-align,
by any of the following commands
$ py.test tests/test_corpus_sim.py
$ py.test

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""
import copy

import numpy as np
import pytest

from corpus_align.study.corpus_sim import (
    ExperimentSpec, OracleBundle, sample_latent, make_distortion,
    simulate_votes, synthesize_features, build_collection,
    corpus_effect_fraction, default_benchmark_config, specs_from_config)
from corpus_align.study.cubic import MonotoneCubic
from corpus_align.study.errors import ConfigurationError

from conftest import TINY_SIMULATION


def make_spec(**kwargs):
    values = dict(name='exp', n_files=100, votes_per_file=8,
                  distortion=MonotoneCubic.identity(), vote_noise_sd=0.8,
                  condition_range=(1., 5.), feature_dim=4,
                  feature_noise_sd=0.05)
    values.update(kwargs)
    return ExperimentSpec(**values)


def test_experiment_spec_validation():
    with pytest.raises(ConfigurationError):
        make_spec(n_files=5)
    with pytest.raises(ConfigurationError):
        make_spec(condition_range=(0., 5.))
    with pytest.raises(ConfigurationError):
        make_spec(feature_dim=1)
    with pytest.raises(ConfigurationError):
        make_spec(distortion=MonotoneCubic([6., -1., 0., 0.]))


def test_sample_latent():
    fixed = sample_latent(make_spec(condition_range=(3., 3.)), seed=0)
    np.testing.assert_array_equal(fixed, np.full(100, 3.))
    spec = make_spec(n_files=10000, condition_range=(2., 4.))
    latent = sample_latent(spec, seed=1)
    assert latent.min() >= 2. and latent.max() <= 4.
    assert abs(latent.mean() - 3.) < 0.05
    np.testing.assert_array_equal(latent, sample_latent(spec, seed=1))


def test_severity_zero_is_the_identity():
    for seed in range(5):
        np.testing.assert_array_equal(
            make_distortion(0., seed).coefficients, [0., 1., 0., 0.])


@pytest.mark.parametrize('condition_range', [(1., 5.), (1., 4.), (2., 5.)])
def test_full_severity_shifts_some_score_by_at_least_2_5(condition_range):
    grid = np.linspace(1., 5., 1000)
    for seed in range(10):
        p = make_distortion(1., seed, condition_range)
        assert p.is_monotone()
        assert np.max(np.abs(p(grid) - grid)) >= 2.5 - 1e-9


def test_distortion_direction_follows_the_conditions():
    """Harsh experiments score below the identity, lenient ones above"""
    grid = np.linspace(1., 5., 50)
    harsh = make_distortion(0.8, 0, condition_range=(2., 5.))
    lenient = make_distortion(0.8, 0, condition_range=(1., 4.))
    assert np.mean(harsh(grid) - grid) < 0.
    assert np.mean(lenient(grid) - grid) > 0.


def test_deviation_grows_with_severity():
    grid = np.linspace(1., 5., 200)
    for seed in range(5):
        deviations = [np.max(np.abs(make_distortion(s, seed)(grid) - grid))
                      for s in (0.3, 0.6, 1.)]
        assert deviations[0] < deviations[1] < deviations[2]
    with pytest.raises(ConfigurationError):
        make_distortion(1.5, 0)


def test_vote_noise_and_clipping():
    assert simulate_votes(2.4, make_spec(vote_noise_sd=0.), seed=0) == \
        pytest.approx(2.4)
    mos = simulate_votes(np.full(10000, 3.), make_spec(), seed=1)
    assert abs(np.std(mos) - 0.8 / np.sqrt(8)) < 0.15 * 0.8 / np.sqrt(8)
    # Expected score 5.5 is clipped to the top of the scale
    shifted = make_spec(distortion=MonotoneCubic([0.5, 1., 0., 0.]),
                        vote_noise_sd=0.)
    assert simulate_votes(5., shifted, seed=0) == 5.
    with pytest.raises(ConfigurationError):
        simulate_votes(5.5, make_spec(), seed=0)


def test_features_follow_the_latent():
    spec = make_spec(feature_noise_sd=0.)
    np.testing.assert_array_equal(synthesize_features(2.5, spec, seed=0),
                                  synthesize_features(2.5, spec, seed=1))
    features = synthesize_features(np.array([1., 1.1, 4.5]), spec, seed=0)
    assert features.shape == (3, 4)
    assert np.linalg.norm(features[0] - features[1]) < \
        np.linalg.norm(features[0] - features[2])
    noisy = make_spec()
    np.testing.assert_array_equal(synthesize_features([2., 3.], noisy, 4),
                                  synthesize_features([2., 3.], noisy, 4))


def test_collection_is_reproducible_and_shares_files():
    specs, seed, common_fraction = specs_from_config(TINY_SIMULATION)
    collection, oracle = build_collection(specs, seed, common_fraction)
    again, _ = build_collection(specs, seed, common_fraction)
    for a, b in zip(collection, again):
        assert a.file_ids == b.file_ids
        np.testing.assert_array_equal(a.scores, b.scores)
        np.testing.assert_array_equal(a.features, b.features)

    assert collection.names == ['ref', 'exp_a', 'exp_b']
    assert collection.reference.name == 'ref'
    ref_ids = set(collection['ref'].file_ids)
    for name in ('exp_a', 'exp_b'):
        dataset = collection[name]
        assert len(dataset.split['train']) == 32
        assert len(dataset.split['validation']) == 4
        assert len(dataset.split['test']) == 4
        shared = [f for f in dataset.file_ids if f in ref_ids]
        assert len(shared) > 0
        lo, hi = oracle.condition_ranges[name]
        latents = oracle.latents_for(name, shared)
        assert np.all((latents >= lo) & (latents <= hi))
        np.testing.assert_array_equal(latents,
                                      oracle.latents_for('ref', shared))
    # The latents stay in the oracle
    assert not hasattr(collection['ref'], 'latent')


def test_collection_needs_one_reference():
    specs, seed, _ = specs_from_config(TINY_SIMULATION)
    with pytest.raises(ConfigurationError):
        build_collection([s for s in specs if not s.is_reference], seed)


def test_undistorted_experiments_agree_on_shared_files():
    config = copy.deepcopy(TINY_SIMULATION)
    for experiment in config['experiments']:
        experiment['severity'] = 0.
        experiment['n_files'] = 400
    collection, _ = build_collection(*specs_from_config(config))
    ref = dict(zip(collection['ref'].file_ids, collection['ref'].scores))
    diffs = [mos - ref[f] for name in ('exp_a', 'exp_b')
             for f, mos in zip(collection[name].file_ids,
                               collection[name].scores) if f in ref]
    assert len(diffs) > 50
    assert abs(np.mean(diffs)) < 0.1
    assert np.mean(np.abs(diffs)) < 0.6


def test_default_benchmark_shows_a_corpus_effect():
    collection, _ = build_collection(
        *specs_from_config(default_benchmark_config()))
    assert len(collection) == 4
    assert corpus_effect_fraction(collection, threshold=1.) >= 0.3


def test_config_errors():
    config = copy.deepcopy(TINY_SIMULATION)
    del config['experiments'][1]['severity']
    with pytest.raises(ConfigurationError) as e:
        specs_from_config(config)
    assert str(e.value) == 'missing config key: severity'
    config = copy.deepcopy(TINY_SIMULATION)
    config['experiments'][0]['severity'] = 0.2
    with pytest.raises(ConfigurationError):
        specs_from_config(config)


def test_oracle_round_trip(tmp_path):
    specs, seed, common_fraction = specs_from_config(TINY_SIMULATION)
    _, oracle = build_collection(specs, seed, common_fraction)
    path = tmp_path / 'oracle.json'
    oracle.save(str(path))
    loaded = OracleBundle.load(str(path))
    assert loaded.latents == oracle.latents
    for name, cubic in oracle.distortions.items():
        np.testing.assert_array_equal(loaded.distortions[name].coefficients,
                                      cubic.coefficients)
