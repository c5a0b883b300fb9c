"""
This file is part of corpus-align.

It defines the corpus-effect simulator: synthetic listening experiments
that sample a shared latent quality space, each with its own monotone
distortion of the score scale, its own range of conditions, its own
number of votes per file, and a fraction of files in common with the
reference experiment.

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""
import copy
import json
import logging
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .collection import RatedDataset, DatasetCollection
from .cubic import MonotoneCubic, NOMINAL_RANGE
from .errors import ConfigurationError, NumericError
from .utilities import stream_seed

logger = logging.getLogger(__name__)

MAX_DISTORTION_DRAWS = 100

SIMULATION_KEYS = ('seed', 'feature_dim', 'common_fraction', 'experiments')
EXPERIMENT_KEYS = ('name', 'n_files', 'votes_per_file', 'severity',
                   'vote_noise_sd', 'condition_range', 'feature_noise_sd',
                   'is_reference')


@dataclass
class ExperimentSpec:
    """
    Description of one synthetic listening experiment

    Attributes
    ----------
    name: string

    n_files: int (at least 10)

    votes_per_file: int (at least 1)

    distortion: MonotoneCubic
        Maps latent quality to the expected score in this experiment

    vote_noise_sd: float
        Standard deviation of a single vote around the expected score

    condition_range: (lo, hi) within [1, 5]
        Interval of latent quality covered by the experiment

    feature_dim: int (at least 2)

    feature_noise_sd: float

    is_reference: bool

    severity: float
        Severity the distortion was drawn with (informative only)
    """
    name: str
    n_files: int
    votes_per_file: int
    distortion: MonotoneCubic
    vote_noise_sd: float
    condition_range: tuple
    feature_dim: int
    feature_noise_sd: float
    is_reference: bool = False
    severity: float = 0.

    def __post_init__(self):
        lo, hi = (float(v) for v in self.condition_range)
        self.condition_range = (lo, hi)
        problems = []
        if self.n_files < 10:
            problems.append('n_files must be >= 10')
        if self.votes_per_file < 1:
            problems.append('votes_per_file must be >= 1')
        if not NOMINAL_RANGE[0] <= lo <= hi <= NOMINAL_RANGE[1]:
            problems.append('condition_range must be a nonempty interval '
                            'within [1, 5]')
        if self.feature_dim < 2:
            problems.append('feature_dim must be >= 2')
        if self.vote_noise_sd < 0 or self.feature_noise_sd < 0:
            problems.append('noise levels must be nonnegative')
        if not self.distortion.is_monotone():
            problems.append('the distortion must increase on [1, 5]')
        if problems:
            raise ConfigurationError('Experiment %s: %s'
                                     % (self.name, '; '.join(problems)))


def sample_latent(spec, seed):
    """
    Latent quality of every file: `spec.n_files` uniform draws over
    `spec.condition_range`

    `seed` may be an int or a numpy Generator.
    """
    lo, hi = spec.condition_range
    if lo == hi:
        return np.full(spec.n_files, lo)
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, spec.n_files)


def make_distortion(severity, seed, condition_range=NOMINAL_RANGE):
    """
    Draw a monotone cubic corpus-effect distortion

    The distortion blends the identity with a compressed map of [1, 5]
    onto a sub-interval of the scale:
    p(s) = (1 - severity) s + severity q(s). Lenient experiments
    (conditions mostly below the scale middle) map onto [~3.7, ~4.8],
    harsh ones (conditions mostly above) onto [~1.2, ~2.3]; full-range
    experiments pick a direction at random. At severity 1 some score is
    therefore shifted by at least 2.5.

    Parameters
    ----------
    severity: float in [0, 1]

    seed: int or numpy Generator

    condition_range: (lo, hi)

    Returns
    -------
    A MonotoneCubic (the identity at severity 0)
    """
    if not 0. <= severity <= 1.:
        raise ConfigurationError('severity must lie in [0, 1], got %r'
                                 % severity)
    if severity == 0.:
        return MonotoneCubic.identity()
    rng = np.random.default_rng(seed)
    middle = 0.5 * (condition_range[0] + condition_range[1])
    if middle > 3.:
        harsh = True
    elif middle < 3.:
        harsh = False
    else:
        harsh = bool(rng.random() < 0.5)

    s = Polynomial([0., 1.])
    t = (s - NOMINAL_RANGE[0]) / (NOMINAL_RANGE[1] - NOMINAL_RANGE[0])
    for _ in range(MAX_DISTORTION_DRAWS):
        kappa = rng.uniform(-0.6, 0.6)
        lam = rng.uniform(-0.25, 0.25)
        if harsh:
            lo, hi = rng.uniform(1.0, 1.4), rng.uniform(2.1, 2.5)
        else:
            lo, hi = rng.uniform(3.5, 3.9), rng.uniform(4.6, 5.0)
        h = t + t * (1 - t) * (kappa + lam * (2 * t - 1))
        p = (1. - severity) * s + severity * (lo + (hi - lo) * h)
        cubic = MonotoneCubic(p.coef)
        if cubic.is_monotone():
            return cubic
        logger.debug('Rejected a non-monotone distortion draw')
    raise NumericError('No monotone distortion found in %d draws'
                       % MAX_DISTORTION_DRAWS)


def simulate_votes(latent, spec, seed):
    """
    Mean opinion score of files with quality `latent` in experiment `spec`

    Each file receives `spec.votes_per_file` votes drawn from
    Normal(p(latent), vote_noise_sd); the mean is clipped to [1, 5].

    Parameters
    ----------
    latent: float or 1darray, within [1, 5]

    spec: ExperimentSpec

    seed: int or numpy Generator

    Returns
    -------
    A float (scalar latent) or a 1darray
    """
    latent_arr = np.atleast_1d(np.asarray(latent, dtype=np.float64))
    if np.any(latent_arr < NOMINAL_RANGE[0]) or \
            np.any(latent_arr > NOMINAL_RANGE[1]):
        raise ConfigurationError('Latent quality must lie in [1, 5]')
    rng = np.random.default_rng(seed)
    expected = spec.distortion(latent_arr)
    votes = rng.normal(expected[:, None], spec.vote_noise_sd,
                       size=(latent_arr.size, spec.votes_per_file))
    mos = np.clip(votes.mean(axis=1), *NOMINAL_RANGE)
    if np.ndim(latent) == 0:
        return float(mos[0])
    return mos


def feature_core(latent, feature_dim):
    """
    Noiseless feature embedding of latent quality

    The first coordinate is linear in the latent; the others are Gaussian
    bumps centered evenly over the scale. Returns an array of shape
    (n, feature_dim).
    """
    latent = np.atleast_1d(np.asarray(latent, dtype=np.float64))
    t = (latent - NOMINAL_RANGE[0]) / (NOMINAL_RANGE[1] - NOMINAL_RANGE[0])
    n_bumps = feature_dim - 1
    if n_bumps == 1:
        centers = np.array([0.5])
        width = 0.5
    else:
        centers = np.linspace(0., 1., n_bumps)
        width = 1. / n_bumps
    bumps = np.exp(-0.5 * ((t[:, None] - centers[None, :]) / width) ** 2)
    return np.column_stack([2. * t - 1., bumps])


def synthesize_features(latent, spec, seed):
    """
    Feature vectors of files with quality `latent`: the fixed embedding
    `feature_core` plus Normal(0, feature_noise_sd) per coordinate

    Returns a 1darray for a scalar latent, a 2darray otherwise.
    """
    if spec.feature_dim < 2:
        raise ConfigurationError('feature_dim must be >= 2')
    core = feature_core(latent, spec.feature_dim)
    if spec.feature_noise_sd > 0:
        rng = np.random.default_rng(seed)
        core = core + rng.normal(0., spec.feature_noise_sd, size=core.shape)
    if np.ndim(latent) == 0:
        return core[0]
    return core


class OracleBundle(object):
    """
    Ground truth of a simulated collection, kept away from training

    Attributes
    ----------
    latents: dict name -> dict file_id -> latent quality

    distortions: dict name -> MonotoneCubic

    condition_ranges: dict name -> (lo, hi)
    """

    def __init__(self, latents, distortions, condition_ranges):
        self.latents = latents
        self.distortions = distortions
        self.condition_ranges = condition_ranges

    def latents_for(self, name, file_ids):
        """Latent qualities of the files `file_ids` of dataset `name`."""
        table = self.latents[name]
        return np.array([table[f] for f in file_ids])

    def to_dict(self):
        return {'latents': self.latents,
                'distortions': {k: v.to_list()
                                for k, v in self.distortions.items()},
                'condition_ranges': {k: list(v) for k, v
                                     in self.condition_ranges.items()}}

    @classmethod
    def from_dict(cls, d):
        return cls({k: dict(v) for k, v in d['latents'].items()},
                   {k: MonotoneCubic(v) for k, v in d['distortions'].items()},
                   {k: tuple(v) for k, v in d['condition_ranges'].items()})

    def save(self, path):
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(json.dumps(self.to_dict(), sort_keys=True) + '\n')

    @classmethod
    def load(cls, path):
        with open(path, encoding='utf-8') as f:
            return cls.from_dict(json.load(f))


def build_collection(specs, seed, common_fraction=0.2):
    """
    Simulate every experiment of `specs`

    Every non-reference experiment reuses a fraction `common_fraction` of
    the reference files (same file id, same latent, hence near-identical
    features) whose latent falls inside its condition range. Each
    experiment draws from its own stream, seeded from (`seed`, name).

    Parameters
    ----------
    specs: list of ExperimentSpec, exactly one of them reference

    seed: int

    common_fraction: float in [0, 1]

    Returns
    -------
    A tuple with
       collection: DatasetCollection (deterministic 80/10/10 splits)
       oracle: OracleBundle
    """
    references = [s for s in specs if s.is_reference]
    if len(references) != 1:
        raise ConfigurationError(
            'Exactly one experiment must be marked as reference, found %d'
            % len(references))
    if not 0. <= common_fraction <= 1.:
        raise ConfigurationError('common_fraction must lie in [0, 1]')
    reference = references[0]

    generated = {}
    ref_rng = np.random.default_rng(stream_seed(seed, reference.name))
    ref_latents = sample_latent(reference, ref_rng)
    ref_ids = ['%s-%05d' % (reference.name, i)
               for i in range(reference.n_files)]
    generated[reference.name] = (ref_latents, ref_ids, ref_rng)

    for spec in specs:
        if spec.is_reference:
            continue
        rng = np.random.default_rng(stream_seed(seed, spec.name))
        latents = sample_latent(spec, rng)
        file_ids = ['%s-%05d' % (spec.name, i) for i in range(spec.n_files)]
        lo, hi = spec.condition_range
        inside = np.flatnonzero((ref_latents >= lo) & (ref_latents <= hi))
        k = min(int(round(common_fraction * spec.n_files)), inside.size)
        for i, j in enumerate(inside[:k]):
            latents[i] = ref_latents[j]
            file_ids[i] = ref_ids[j]
        logger.debug('%s shares %d file(s) with %s', spec.name, k,
                     reference.name)
        generated[spec.name] = (latents, file_ids, rng)

    datasets = []
    latent_tables = {}
    for spec in specs:
        latents, file_ids, rng = generated[spec.name]
        features = synthesize_features(latents, spec, rng)
        mos = simulate_votes(latents, spec, rng)
        datasets.append(RatedDataset(spec.name, features, mos, file_ids,
                                     is_reference=spec.is_reference,
                                     seed=seed))
        latent_tables[spec.name] = {f: float(x)
                                    for f, x in zip(file_ids, latents)}
    oracle = OracleBundle(latent_tables,
                          {s.name: s.distortion for s in specs},
                          {s.name: s.condition_range for s in specs})
    return DatasetCollection(datasets), oracle


def corpus_effect_fraction(collection, threshold=1.0):
    """
    Fraction of the files present in several datasets whose score differs
    by more than `threshold` between some pair of datasets
    """
    scores = {}
    for dataset in collection:
        for file_id, mos in zip(dataset.file_ids, dataset.scores):
            scores.setdefault(file_id, []).append(mos)
    common = [v for v in scores.values() if len(v) > 1]
    if not common:
        return 0.
    return float(np.mean([max(v) - min(v) > threshold for v in common]))


def default_benchmark_config():
    """
    The default benchmark: one reference and three distorted
    experiments of increasing severity
    """
    return copy.deepcopy({
        'seed': 0,
        'feature_dim': 16,
        'common_fraction': 0.2,
        'experiments': [
            {'name': 'ref', 'n_files': 2000, 'votes_per_file': 8,
             'severity': 0., 'vote_noise_sd': 0.7,
             'condition_range': [1., 5.], 'feature_noise_sd': 0.05,
             'is_reference': True},
            {'name': 'exp_a', 'n_files': 1000, 'votes_per_file': 8,
             'severity': 0.3, 'vote_noise_sd': 0.7,
             'condition_range': [1., 5.], 'feature_noise_sd': 0.05,
             'is_reference': False},
            {'name': 'exp_b', 'n_files': 1000, 'votes_per_file': 4,
             'severity': 0.6, 'vote_noise_sd': 0.7,
             'condition_range': [1., 4.], 'feature_noise_sd': 0.05,
             'is_reference': False},
            {'name': 'exp_c', 'n_files': 1000, 'votes_per_file': 4,
             'severity': 0.9, 'vote_noise_sd': 0.7,
             'condition_range': [2., 5.], 'feature_noise_sd': 0.05,
             'is_reference': False}]})


def _require(d, keys):
    for key in keys:
        if key not in d:
            raise ConfigurationError('missing config key: %s' % key)


def specs_from_config(config):
    """
    Build the ExperimentSpecs described by a simulation config

    Returns
    -------
    A tuple (specs, seed, common_fraction)
    """
    _require(config, SIMULATION_KEYS)
    seed = int(config['seed'])
    specs = []
    for experiment in config['experiments']:
        _require(experiment, EXPERIMENT_KEYS)
        condition_range = tuple(float(v)
                                for v in experiment['condition_range'])
        severity = float(experiment['severity'])
        if experiment['is_reference'] and severity != 0.:
            raise ConfigurationError('The reference experiment %s must have '
                                     'severity 0' % experiment['name'])
        distortion = make_distortion(
            severity, stream_seed(seed, 'distortion:' + experiment['name']),
            condition_range)
        specs.append(ExperimentSpec(
            name=str(experiment['name']),
            n_files=int(experiment['n_files']),
            votes_per_file=int(experiment['votes_per_file']),
            distortion=distortion,
            vote_noise_sd=float(experiment['vote_noise_sd']),
            condition_range=condition_range,
            feature_dim=int(config['feature_dim']),
            feature_noise_sd=float(experiment['feature_noise_sd']),
            is_reference=bool(experiment['is_reference']),
            severity=severity))
    return specs, seed, float(config['common_fraction'])


def load_simulation_config(path):
    with open(path, encoding='utf-8') as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigurationError('Config %s is not valid JSON: %s'
                                     % (path, e))
