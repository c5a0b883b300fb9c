"""
corpus-align

Usage
-----
See the class AlignNetStudy to train and compare regimens on a
collection of rated datasets, or the `corpus-align` command.
"""
# Make the AlignNetStudy object accessible from outside the package
from .study import AlignNetStudy, AlignmentCurve

# Define the version number
from .__version__ import __version__
__all__ = ['AlignNetStudy', 'AlignmentCurve', '__version__']
