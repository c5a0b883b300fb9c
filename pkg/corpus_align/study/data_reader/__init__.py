from .data_reader import DataReader, available_backends
__all__ = ['DataReader', 'available_backends']
