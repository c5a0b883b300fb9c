"""
This file is part of corpus-align.

It routes the calls to the data reader to the backend that understands
the files of a dataset collection.

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""
from ..collection import RatedDataset, DatasetCollection
from ..errors import ConfigurationError
from . import csv_reader

available_backends = ['csv']


class DataReader(object):
    """
    Class that performs the accesses to the files of a collection
    (manifest and per-dataset tables)

    The methods of this class are agnostic of the backend used to store
    the datasets.
    """

    def __init__(self, backend):
        """
        Initialize the DataReader class.
        """
        if backend not in available_backends:
            raise ConfigurationError(
                'Unknown backend: %s\nThe available backends are: \n - %s'
                % (backend, '\n - '.join(available_backends)))
        self.backend = backend
        self.name_to_entry = {}
        self.manifest = None

    def list_datasets(self, path_to_manifest):
        """
        Return the names of the datasets listed in the manifest
        (The correspondence between names and files is stored internally.)

        Parameter
        ---------
        path_to_manifest: string

        Returns
        -------
        A list of dataset names, in manifest order
        """
        if self.backend == 'csv':
            self.manifest = csv_reader.read_manifest(path_to_manifest)
            names, self.name_to_entry = csv_reader.list_datasets(self.manifest)
        if len(names) == 0:
            raise ConfigurationError('Found no dataset in %s'
                                     % path_to_manifest)
        return names

    def read_dataset(self, name):
        """
        Read one dataset; its train/validation/test split is derived from
        the manifest seed

        Returns
        -------
        A RatedDataset
        """
        entry = self.name_to_entry[name]
        if self.backend == 'csv':
            file_ids, scores, features = csv_reader.read_dataset_csv(
                entry['abs_path'], self.manifest['feature_dim'])
        return RatedDataset(name, features, scores, file_ids,
                            is_reference=bool(entry['is_reference']),
                            seed=int(self.manifest['seed']))

    def read_collection(self, path_to_manifest):
        """Read every dataset of the manifest into a DatasetCollection."""
        names = self.list_datasets(path_to_manifest)
        return DatasetCollection([self.read_dataset(name) for name in names])
