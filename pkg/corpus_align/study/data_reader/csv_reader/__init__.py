from .params_reader import read_manifest, write_manifest
from .dataset_reader import read_dataset_csv, write_dataset_csv
from .utilities import list_datasets

__all__ = ['read_manifest', 'write_manifest', 'read_dataset_csv',
           'write_dataset_csv', 'list_datasets']
