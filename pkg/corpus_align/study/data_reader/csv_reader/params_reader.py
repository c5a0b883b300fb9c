"""
This file is part of corpus-align.

It defines the functions that read and write the manifest of a
dataset collection.

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""
import json
import os

from ...errors import ConfigurationError

MANIFEST_KEYS = ('created_by', 'seed', 'feature_dim', 'datasets')
DATASET_KEYS = ('name', 'csv_path', 'is_reference')


def read_manifest(path):
    """
    Read and check a manifest file

    Parameter
    ---------
    path: string
        The path to the manifest (JSON)

    Returns
    -------
    A dictionary with the keys `created_by`, `seed`, `feature_dim` and
    `datasets`; every dataset entry gets an additional `abs_path` key
    (`csv_path` resolved relative to the manifest)
    """
    try:
        with open(path, encoding='utf-8') as f:
            manifest = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigurationError('Manifest %s is not valid JSON: %s'
                                 % (path, e))
    for key in MANIFEST_KEYS:
        if key not in manifest:
            raise ConfigurationError('missing manifest key: %s' % key)
    root = os.path.dirname(os.path.abspath(path))
    n_reference = 0
    for entry in manifest['datasets']:
        for key in DATASET_KEYS:
            if key not in entry:
                raise ConfigurationError('missing manifest key: datasets.%s'
                                         % key)
        entry['abs_path'] = os.path.join(root, entry['csv_path'])
        if not os.path.isfile(entry['abs_path']):
            raise ConfigurationError('Dataset file %s listed in %s does not '
                                     'exist' % (entry['csv_path'], path))
        n_reference += bool(entry['is_reference'])
    if n_reference != 1:
        raise ConfigurationError('The manifest must mark exactly one reference '
                                 'dataset, found %d' % n_reference)
    return manifest


def write_manifest(path, collection, seed, created_by='corpus-align simulate'):
    """
    Write the manifest of `collection`, whose datasets are stored as
    `<name>.csv` next to the manifest
    """
    manifest = {
        'created_by': created_by,
        'seed': int(seed),
        'feature_dim': int(collection.feature_dim),
        'datasets': [{'name': d.name, 'csv_path': '%s.csv' % d.name,
                      'is_reference': d.is_reference} for d in collection]}
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(json.dumps(manifest, sort_keys=True, indent=1) + '\n')
    return manifest
