"""
This file is part of corpus-align.

It defines the evaluation suite: LCC and RMSE, significance tests for
differences between two estimators on the same test items (Zou's interval
for dependent overlapping correlations, paired bootstrap for RMSE),
monotone cubic fits of alignment curves, and the EvalReport.

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import stats
from scipy.optimize import minimize

from .alignment_curve import AlignmentCurve
from .cubic import MonotoneCubic, GRID_POINTS
from .errors import (ShapeError, UndefinedCorrelationError, ConfigurationError,
                     DegenerateFitError, PairingError)
from .network import mse

logger = logging.getLogger(__name__)

POOLED = 'All'


def _as_pair(x, y, min_length):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ShapeError('Lengths differ (%d vs %d)' % (x.size, y.size))
    if x.size < min_length:
        raise ShapeError('At least %d values are needed, got %d'
                         % (min_length, x.size))
    return x, y


def lcc(x, y):
    """
    Pearson's linear correlation coefficient

    Raises an UndefinedCorrelationError when either vector is constant.
    """
    x, y = _as_pair(x, y, 3)
    if np.ptp(x) == 0. or np.ptp(y) == 0.:
        raise UndefinedCorrelationError(
            'The correlation is undefined for a constant vector')
    r, _ = stats.pearsonr(x, y)
    return min(1., max(-1., float(r)))


def rmse(x, y):
    """Root mean-squared error, sqrt(mse(x, y))."""
    x, y = _as_pair(x, y, 1)
    return math.sqrt(mse(x, y))


def _z_critical(level):
    if not 0. < level < 1.:
        raise ConfigurationError('The confidence level must lie in (0, 1), '
                                 'got %r' % level)
    return float(stats.norm.ppf(1. - (1. - level) / 2.))


def fisher_interval(r, n, level=0.95):
    """Confidence interval of a single correlation via Fisher's z."""
    if not -1. < r < 1.:
        raise DegenerateFitError('Fisher transform undefined for r = %r' % r)
    z = math.atanh(r)
    half = _z_critical(level) / math.sqrt(n - 3)
    return math.tanh(z - half), math.tanh(z + half)


def zou_ci_lcc_diff(r1, r2, r12, n, level=0.95):
    """
    Confidence interval for r1 - r2, where r1 and r2 are the correlations
    of two estimators with the same targets on the same n items, and r12
    is the correlation between the two estimators

    Parameters
    ----------
    r1, r2, r12: floats in (-1, 1)

    n: int, at least 10

    level: float in (0, 1)

    Returns
    -------
    (low, high); the difference is significant when 0 lies outside
    """
    for label, r in (('r1', r1), ('r2', r2), ('r12', r12)):
        if not -1. < r < 1.:
            raise DegenerateFitError(
                'Zou interval undefined for %s = %r (needs |r| < 1)'
                % (label, r))
    if n < 10:
        raise ConfigurationError('Zou interval needs n >= 10, got %d' % n)
    l1, u1 = fisher_interval(r1, n, level)
    l2, u2 = fisher_interval(r2, n, level)
    # Correlation between the two correlation estimates
    c = (((r12 - 0.5 * r1 * r2) * (1. - r1 ** 2 - r2 ** 2 - r12 ** 2)
          + r12 ** 3) / ((1. - r1 ** 2) * (1. - r2 ** 2)))
    diff = r1 - r2
    low = diff - math.sqrt(max(0., (r1 - l1) ** 2 + (u2 - r2) ** 2
                               - 2. * c * (r1 - l1) * (u2 - r2)))
    high = diff + math.sqrt(max(0., (u1 - r1) ** 2 + (r2 - l2) ** 2
                                - 2. * c * (u1 - r1) * (r2 - l2)))
    return low, high


def bootstrap_rmse_diff(err_a, err_b, n_boot=1000, level=0.95, seed=0):
    """
    Percentile bootstrap interval of RMSE(err_a) - RMSE(err_b)

    Both error vectors refer to the same test items, so the items are
    resampled jointly.

    Parameters
    ----------
    err_a, err_b: 1darrays of errors (estimate - target), same items

    n_boot: int, at least 1000

    level: float in (0, 1)

    seed: int

    Returns
    -------
    (low, high)
    """
    err_a = np.asarray(err_a, dtype=np.float64).ravel()
    err_b = np.asarray(err_b, dtype=np.float64).ravel()
    if err_a.size != err_b.size:
        raise PairingError('Paired error vectors differ in length (%d vs %d)'
                           % (err_a.size, err_b.size))
    if err_a.size == 0:
        raise ShapeError('Empty error vectors')
    if n_boot < 1000:
        raise ConfigurationError('n_boot must be at least 1000, got %d'
                                 % n_boot)
    if not 0. < level < 1.:
        raise ConfigurationError('The confidence level must lie in (0, 1)')
    rng = np.random.default_rng(seed)
    sq_a = err_a ** 2
    sq_b = err_b ** 2
    n = err_a.size
    diffs = np.empty(n_boot)
    # Resample in chunks to bound memory on large test sets
    chunk = max(1, int(2e6 // n))
    for start in range(0, n_boot, chunk):
        stop = min(n_boot, start + chunk)
        idx = rng.integers(0, n, size=(stop - start, n))
        diffs[start:stop] = (np.sqrt(sq_a[idx].mean(axis=1))
                             - np.sqrt(sq_b[idx].mean(axis=1)))
    alpha = 1. - level
    low, high = np.percentile(diffs, [100. * alpha / 2.,
                                      100. * (1. - alpha / 2.)])
    return float(low), float(high)


@dataclass
class SignificanceResult:
    """
    Interval for the difference (A - B) of one metric between two
    estimators on the same test items
    """
    metric: str
    difference: float
    ci_low: float
    ci_high: float

    @property
    def significant(self):
        return self.ci_low > 0. or self.ci_high < 0.

    @property
    def improved(self):
        """A is significantly better than B."""
        if self.metric == 'lcc':
            return self.ci_low > 0.
        return self.ci_high < 0.

    def to_dict(self):
        return {'metric': self.metric, 'difference': self.difference,
                'ci_low': self.ci_low, 'ci_high': self.ci_high,
                'significant': self.significant, 'improved': self.improved}


def compare_lcc(targets, est_a, est_b, level=0.95):
    """Zou interval for lcc(targets, est_a) - lcc(targets, est_b)."""
    r1 = lcc(targets, est_a)
    r2 = lcc(targets, est_b)
    r12 = lcc(est_a, est_b)
    if r12 >= 1.:
        # Identical rankings: the two correlations cannot differ
        return SignificanceResult('lcc', r1 - r2, -0., 0.)
    low, high = zou_ci_lcc_diff(r1, r2, r12, len(np.ravel(targets)), level)
    return SignificanceResult('lcc', r1 - r2, low, high)


def compare_rmse(targets, est_a, est_b, n_boot=1000, level=0.95, seed=0):
    """Paired bootstrap interval for rmse(est_a) - rmse(est_b)."""
    targets = np.asarray(targets, dtype=np.float64)
    err_a = np.asarray(est_a, dtype=np.float64) - targets
    err_b = np.asarray(est_b, dtype=np.float64) - targets
    low, high = bootstrap_rmse_diff(err_a, err_b, n_boot, level, seed)
    return SignificanceResult(
        'rmse', rmse(est_a, targets) - rmse(est_b, targets), low, high)


def fit_monotone_cubic(curve, n_grid=GRID_POINTS):
    """
    Least-squares cubic approximation of an alignment curve, increasing
    over the range of the curve

    The unconstrained fit is returned when its derivative is positive on
    an `n_grid` grid spanning the points; otherwise the fit is redone with
    p' >= delta imposed on that grid.

    Parameters
    ----------
    curve: AlignmentCurve, or a tuple (x, y) of 1darrays

    Returns
    -------
    A MonotoneCubic
    """
    if isinstance(curve, AlignmentCurve):
        x, y = curve.intermediate, curve.aligned
    else:
        x, y = curve
    x, y = _as_pair(x, y, 1)
    if x.size < 8:
        raise DegenerateFitError('A cubic fit needs at least 8 points, got %d'
                                 % x.size)
    lo, hi = float(x.min()), float(x.max())
    if not hi - lo > 1e-9 * max(1., abs(lo)):
        raise DegenerateFitError('The points span a degenerate range [%g, %g]'
                                 % (lo, hi))

    cubic = MonotoneCubic(P.polyfit(x, y, 3))
    if cubic.is_monotone(lo, hi, n_grid):
        return cubic

    warnings.warn('The least-squares cubic is not increasing on [%.3g, %.3g]; '
                  'refitting under a monotonicity constraint' % (lo, hi),
                  UserWarning)
    V = P.polyvander(x, 3)
    grid = np.linspace(lo, hi, n_grid)
    D = np.column_stack([np.zeros_like(grid), np.ones_like(grid),
                         2. * grid, 3. * grid ** 2])
    slope = np.polyfit(x, y, 1)[0]
    delta = 1e-4 * max(abs(slope), 1e-2)
    m0 = max(slope, 10. * delta)
    x0 = np.array([y.mean() - m0 * x.mean(), m0, 0., 0.])
    result = minimize(
        lambda c: float(np.mean((V @ c - y) ** 2)), x0,
        jac=lambda c: 2. * V.T @ (V @ c - y) / y.size,
        constraints=[{'type': 'ineq', 'fun': lambda c: D @ c - delta,
                      'jac': lambda c: D}],
        method='SLSQP', options={'ftol': 1e-12, 'maxiter': 500})
    cubic = MonotoneCubic(result.x)
    if not cubic.is_monotone(lo, hi, n_grid):
        # The constrained solver stopped short; fall back to the feasible
        # starting point (a line with positive slope)
        logger.warning('Constrained cubic fit did not converge (%s)',
                       result.message)
        cubic = MonotoneCubic(x0)
    return cubic


@dataclass
class DatasetScores:
    """LCC (None when undefined), RMSE and item count of one test set."""
    lcc: float
    rmse: float
    n: int

    def to_dict(self):
        return {'lcc': self.lcc, 'rmse': self.rmse, 'n': self.n}


@dataclass
class Predictions:
    """Test items, targets and estimates of one dataset."""
    file_ids: tuple
    targets: np.ndarray
    estimates: np.ndarray
    intermediate: np.ndarray


@dataclass
class EvalReport:
    """
    Per-dataset and pooled metrics of one estimator

    Attributes
    ----------
    per_dataset: dict name -> DatasetScores

    pooled: DatasetScores over the concatenation of all test sets

    significance: dict (pair label, dataset) -> SignificanceResult

    latent_lcc: dict name -> LCC between intermediate scores and the
        simulator latents (only with an oracle)

    flags: list of strings, e.g. 'undefined-lcc:<dataset>'

    predictions: dict name -> Predictions
    """
    per_dataset: dict
    pooled: DatasetScores
    significance: dict = field(default_factory=dict)
    latent_lcc: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    predictions: dict = field(default_factory=dict)

    @property
    def names(self):
        return list(self.per_dataset)

    def scores(self, name):
        """DatasetScores of a dataset, or of the pooled set for 'All'."""
        if name == POOLED:
            return self.pooled
        return self.per_dataset[name]

    def to_dict(self):
        return {
            'per_dataset': {k: v.to_dict() for k, v in self.per_dataset.items()},
            'pooled': self.pooled.to_dict(),
            'significance': [dict(pair=pair, dataset=name, **res.to_dict())
                             for (pair, name), res in self.significance.items()],
            'latent_lcc': dict(self.latent_lcc),
            'flags': list(self.flags)}

    @classmethod
    def from_dict(cls, d):
        per = {k: DatasetScores(v['lcc'], v['rmse'], v['n'])
               for k, v in d['per_dataset'].items()}
        pooled = DatasetScores(d['pooled']['lcc'], d['pooled']['rmse'],
                               d['pooled']['n'])
        significance = {
            (s['pair'], s['dataset']): SignificanceResult(
                s['metric'], s['difference'], s['ci_low'], s['ci_high'])
            for s in d.get('significance', [])}
        return cls(per, pooled, significance, dict(d.get('latent_lcc', {})),
                   list(d.get('flags', [])))


def _scores(targets, estimates, label, flags):
    try:
        r = lcc(targets, estimates)
    except (UndefinedCorrelationError, ShapeError):
        r = None
        flags.append('undefined-lcc:%s' % label)
    return DatasetScores(r, rmse(estimates, targets), int(targets.size))


def _predictor(model):
    """
    Return a pair of functions (final, intermediate) taking
    (features, name, indicator)
    """
    if hasattr(model, 'estimate'):
        return (lambda feats, name, ind: model.estimate(feats, name),
                lambda feats, name, ind: model.estimate(feats, None))
    # A plain estimator function: estimator(features, indicator)
    return (lambda feats, name, ind: model(feats, ind),
            lambda feats, name, ind: model(feats, ind))


def evaluate(model, collection, split='test', oracle=None):
    """
    Score an estimator on every dataset of `collection`

    Parameters
    ----------
    model: AlignModel, AudioNetModel, or a function
        `estimator(features, indicator) -> estimates`.
        An AlignModel is scored with each dataset's own indicator; bare
        AudioNets are scored with their raw output.

    collection: DatasetCollection

    split: string
        Which split to score ('test' by default)

    oracle: OracleBundle, optional
        When given, the LCC between intermediate scores and the simulator
        latents is added for each dataset

    Returns
    -------
    An EvalReport
    """
    final_fn, intermediate_fn = _predictor(model)
    per_dataset = {}
    predictions = {}
    latent_lcc = {}
    flags = []
    for index, dataset in enumerate(collection):
        part = dataset.subset(split)
        if len(part) == 0:
            raise ShapeError('The %s split of %s is empty'
                             % (split, dataset.name))
        indicator = collection.indicator(index)
        estimates = np.asarray(final_fn(part.features, dataset.name, indicator),
                               dtype=np.float64)
        intermediate = np.asarray(
            intermediate_fn(part.features, dataset.name, indicator),
            dtype=np.float64)
        per_dataset[dataset.name] = _scores(part.scores, estimates,
                                            dataset.name, flags)
        predictions[dataset.name] = Predictions(part.file_ids, part.scores,
                                                estimates, intermediate)
        if oracle is not None:
            latents = oracle.latents_for(dataset.name, part.file_ids)
            try:
                latent_lcc[dataset.name] = lcc(intermediate, latents)
            except UndefinedCorrelationError:
                latent_lcc[dataset.name] = None
                flags.append('undefined-latent-lcc:%s' % dataset.name)

    targets = np.concatenate([p.targets for p in predictions.values()])
    estimates = np.concatenate([p.estimates for p in predictions.values()])
    pooled = _scores(targets, estimates, POOLED, flags)
    for flag in flags:
        logger.warning('Evaluation flag: %s', flag)
    return EvalReport(per_dataset, pooled, latent_lcc=latent_lcc, flags=flags,
                      predictions=predictions)


def cross_evaluate(models, collection, split='test'):
    """
    Evaluate each model of `models` (a dict training-dataset name -> model)
    on every dataset of `collection`

    The diagonal of the resulting grid measures depth, the off-diagonal
    entries measure breadth.

    Returns
    -------
    A dict training-dataset name -> EvalReport
    """
    return {name: evaluate(model, collection, split)
            for name, model in models.items()}


def individual_report(cross_reports):
    """
    Fold the diagonal of a cross-evaluation grid into one EvalReport:
    every dataset is scored by the model trained on it, and the pooled
    entry concatenates those predictions

    Parameters
    ----------
    cross_reports: dict training-dataset name -> EvalReport,
        as returned by `cross_evaluate`

    Returns
    -------
    An EvalReport, usable as the 'individual' row of a results table
    """
    if not cross_reports:
        raise ConfigurationError('No individual model was evaluated')
    names = next(iter(cross_reports.values())).names
    missing = [name for name in names if name not in cross_reports]
    if missing:
        raise ConfigurationError('No individual model for: %s'
                                 % ', '.join(missing))
    flags = []
    per_dataset = {}
    predictions = {}
    for name in names:
        per_dataset[name] = cross_reports[name].per_dataset[name]
        predictions[name] = cross_reports[name].predictions[name]
        if per_dataset[name].lcc is None:
            flags.append('undefined-lcc:%s' % name)
    targets = np.concatenate([p.targets for p in predictions.values()])
    estimates = np.concatenate([p.estimates for p in predictions.values()])
    pooled = _scores(targets, estimates, POOLED, flags)
    return EvalReport(per_dataset, pooled, flags=flags,
                      predictions=predictions)


def check_pairing(pred_a, pred_b):
    """
    Raise a PairingError unless two prediction sets cover the same
    datasets and test items, in the same order, with the same targets
    """
    if list(pred_a) != list(pred_b):
        raise PairingError('The predictions cover different datasets: %s vs %s'
                           % (', '.join(pred_a), ', '.join(pred_b)))
    for name in pred_a:
        a, b = pred_a[name], pred_b[name]
        if tuple(a.file_ids) != tuple(b.file_ids):
            raise PairingError('Dataset %s: the test items differ' % name)
        if not np.array_equal(a.targets, b.targets):
            raise PairingError('Dataset %s: the targets differ' % name)


def compare_predictions(pred_a, pred_b, label, n_boot=1000, level=0.95,
                        seed=0):
    """
    Significance of the differences between two estimators evaluated on
    the same test items, per dataset and pooled

    Parameters
    ----------
    pred_a, pred_b: dict name -> Predictions

    label: string
        Name of the comparison, e.g. 'all-mdf-alignnet vs all'

    Returns
    -------
    A dict (label, dataset) -> SignificanceResult for each metric,
    keyed as (label + ':lcc' / ':rmse', dataset)
    """
    check_pairing(pred_a, pred_b)
    groups = [(name, pred_a[name], pred_b[name]) for name in pred_a]
    pooled = (POOLED,
              Predictions((), np.concatenate([p.targets for _, p, _ in groups]),
                          np.concatenate([p.estimates for _, p, _ in groups]),
                          None),
              Predictions((), None,
                          np.concatenate([p.estimates for _, _, p in groups]),
                          None))
    results = {}
    for name, a, b in groups + [pooled]:
        targets = a.targets
        try:
            results[(label + ':lcc', name)] = compare_lcc(
                targets, a.estimates, b.estimates, level)
        except (UndefinedCorrelationError, DegenerateFitError,
                ConfigurationError) as e:
            logger.warning('No LCC comparison for %s: %s', name, e)
        results[(label + ':rmse', name)] = compare_rmse(
            targets, a.estimates, b.estimates, n_boot, level, seed)
    return results
