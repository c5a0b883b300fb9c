"""
This file is part of corpus-align.

It defines a number of helper functions that are used across the package.

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""
import copy
import hashlib

from .errors import ConfigurationError


def stream_seed(seed, name):
    """
    Derive an independent, reproducible seed for the stream `name`

    Python's builtin `hash` is salted per process, so the derivation
    goes through SHA-256 instead.
    """
    digest = hashlib.sha256(('%d:%s' % (int(seed), name)).encode('utf-8'))
    return int.from_bytes(digest.digest()[:8], 'little')


def sanitize_dataset_selection(datasets, available):
    """
    Return a standardized list of dataset names

    Parameters
    ----------
    datasets: str, list of str, or None
        The requested dataset(s). None (or an empty list) selects all of them.

    available: list of str
        The names of the datasets in the collection, in collection order

    Returns
    -------
    A list of names, in collection order
    """
    if datasets is None or datasets == []:
        return copy.copy(list(available))
    if not isinstance(datasets, (list, tuple)):
        datasets = [datasets]
    unknown = [name for name in datasets if name not in available]
    if unknown:
        raise ConfigurationError(
            'The dataset selection is erroneous: contains %s\n'
            'The available datasets are: \n - %s'
            % (', '.join(unknown), '\n - '.join(available)))
    # Return a copy in collection order, so that callers may modify it
    return [name for name in available if name in datasets]


def format_float(x):
    """Decimal literal with 17 significant digits (round-trips exactly)."""
    return '%.17g' % x
