"""
This file is part of corpus-align.

It defines the main AlignNetStudy class.

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""
import logging

import numpy as np
from tqdm import tqdm

from .data_reader import DataReader, available_backends
from .errors import ConfigurationError
from .metrics import (evaluate, cross_evaluate, individual_report,
                      fit_monotone_cubic)
from .model import AlignModel, sample_alignment_curve
from .plotter import Plotter
from .training import TrainConfig, RegimenKind, train_regimen
from .utilities import sanitize_dataset_selection

logger = logging.getLogger(__name__)


class AlignNetStudy(object):
    """
    Main class for training and comparing regimens on a collection of
    rated datasets

    For more details, see the docstring of the following methods:
    - train
    - evaluate
    - get_alignment
    - iterate
    """

    def __init__(self, collection, backend=None):
        """
        Initialize a study

        Parameters
        ----------
        collection: string or DatasetCollection
            The path to a manifest, or an already loaded collection

        backend: string
            Backend used to read the manifest (default: the first available)
        """
        if isinstance(collection, str):
            if backend is None:
                backend = available_backends[0]
            self.data_reader = DataReader(backend)
            collection = self.data_reader.read_collection(collection)
        self.collection = collection
        self.datasets = collection.names
        self.plotter = Plotter(collection.reference.name)

    def train(self, regimen, config=None, dataset=None):
        """
        Train with one regimen

        Parameters
        ----------
        regimen: string
            individual, all, all-bal, all-mdf or all-mdf-alignnet

        config: TrainConfig, optional

        dataset: string
            Only for the individual regimen

        Returns
        -------
        A TrainingResult
        """
        kind = RegimenKind.parse(regimen)
        if config is None:
            config = TrainConfig()
        if dataset is not None:
            dataset = sanitize_dataset_selection(dataset, self.datasets)[0]
        logger.info('Training regimen %s (seed %d)', kind.value, config.seed)
        return train_regimen(kind, self.collection, config, dataset=dataset)

    def train_individual_all(self, config=None):
        """
        Train one individual model per dataset

        Returns
        -------
        A dict dataset name -> TrainingResult
        """
        return self.iterate(self.train, RegimenKind.INDIVIDUAL.value, config)

    def evaluate(self, model, split='test', oracle=None):
        """Score `model` on every dataset (see `metrics.evaluate`)."""
        return evaluate(model, self.collection, split, oracle)

    def cross_evaluate(self, results, split='test'):
        """
        Score each individual model on every dataset

        Parameters
        ----------
        results: dict name -> TrainingResult (or model)
        """
        models = {name: getattr(r, 'model', r) for name, r in results.items()}
        return cross_evaluate(models, self.collection, split)

    def get_alignment(self, model, dataset=None, n_points=100, fit=True):
        """
        Sample the learned alignment of a dataset over the intermediate
        scores observed on its training data

        Parameters
        ----------
        model: AlignModel

        dataset: string
            Which dataset

        n_points: int
            Number of grid points

        fit: bool
            Attach a monotone cubic fit to the curve

        Returns
        -------
        An AlignmentCurve
        """
        if not isinstance(model, AlignModel):
            raise ConfigurationError('Only AlignNet models have alignment '
                                     'functions')
        if dataset not in self.datasets:
            raise ConfigurationError(
                'The `dataset` argument is missing or erroneous.\n'
                'The available datasets are: \n - %s\nPlease set the '
                '`dataset` argument accordingly.' % '\n - '.join(self.datasets))
        observed = model.estimate(self.collection[dataset].train.features)
        grid = np.linspace(observed.min(), observed.max(), n_points)
        curve = sample_alignment_curve(model, model.indicator(dataset), grid,
                                       dataset)
        if fit and len(curve) >= 8 and curve.xmax > curve.xmin:
            curve.fitted = fit_monotone_cubic(curve)
        return curve

    def evaluate_individual(self, results, split='test'):
        """
        Score individually trained models on the dataset each was trained
        on, pooled as one 'individual' row of a results table

        Parameters
        ----------
        results: dict name -> TrainingResult (or model), as returned by
            `train_individual_all`
        """
        return individual_report(self.cross_evaluate(results, split))

    def iterate(self, called_method, *args, datasets=None, **kwargs):
        """
        Call `called_method(*args, dataset=name, **kwargs)` once per
        dataset of this study

        Parameters
        ----------
        called_method: callable
            Any callable accepting a `dataset` keyword (e.g. `self.train`
            with the individual regimen, or `self.get_alignment`)

        datasets: string or list of strings, optional
            Restrict the loop to these datasets (default: all of them)

        *args, **kwargs: other arguments passed to `called_method`.
            Do not pass the argument `dataset`.

        Returns
        -------
        A dict dataset name -> result, in collection order
        """
        if 'dataset' in kwargs:
            raise ConfigurationError('`iterate` sets the `dataset` argument '
                                     'itself')
        names = sanitize_dataset_selection(datasets, self.datasets)
        results = {}
        for name in tqdm(names, disable=len(names) < 2):
            logger.debug('Calling %s for dataset %s',
                         getattr(called_method, '__name__', called_method),
                         name)
            results[name] = called_method(*args, dataset=name, **kwargs)
        return results
