"""
This file is part of corpus-align.

It defines the AlignmentCurve class, which is returned when sampling the
learned alignment of a dataset, and gathers the sampled points along with
meta-information about the sampled range.

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""
import numpy as np

from .cubic import NOMINAL_RANGE
from .errors import ConfigurationError, ShapeError


class AlignmentCurve(object):
    """
    A learned mapping from intermediate (reference-scale) scores to the
    score scale of one dataset, sampled on a grid

    Attributes
    ----------
    - name: string
        The dataset the curve belongs to

    - intermediate: 1darray
        Grid of intermediate scores, sorted in ascending order

    - aligned: 1darray
        Output of the alignment at each grid point

    - fitted: MonotoneCubic or None
        Optional cubic approximation of the curve

    - is_reference: bool
        Whether the curve belongs to the reference dataset
        (in which case it is the identity)

    - xmin, xmax, dx: floats
        First grid point, last grid point and mean grid spacing

    - below_nominal, above_nominal: floats
        How far the sampled range extends below 1 and above 5
        (0 when it stays inside the nominal scale)
    """

    def __init__(self, name, intermediate, aligned, fitted=None,
                 is_reference=False):
        """
        Create an AlignmentCurve object
        """
        intermediate = np.asarray(intermediate, dtype=np.float64).ravel()
        aligned = np.asarray(aligned, dtype=np.float64).ravel()
        if intermediate.size != aligned.size:
            raise ShapeError('intermediate and aligned must have the same '
                             'length (%d vs %d)'
                             % (intermediate.size, aligned.size))
        order = np.argsort(intermediate, kind='stable')
        self.name = name
        self.intermediate = intermediate[order]
        self.aligned = aligned[order]
        self.fitted = fitted
        self.is_reference = is_reference
        self._generate_range_info()

    @property
    def points(self):
        """List of (intermediate, aligned) pairs."""
        return list(zip(self.intermediate.tolist(), self.aligned.tolist()))

    def __len__(self):
        return self.intermediate.size

    def max_deviation(self, reference_function, use_fit=False):
        """
        Largest absolute difference between the curve (or its cubic fit)
        and `reference_function`, over the sampled points
        """
        if use_fit:
            if self.fitted is None:
                raise ConfigurationError('Curve %s has no fitted cubic'
                                         % self.name)
            values = self.fitted(self.intermediate)
        else:
            values = self.aligned
        return float(np.max(np.abs(
            values - reference_function(self.intermediate))))

    def _generate_range_info(self):
        """
        Compute the extent of the sampled range and how far it extends
        beyond the nominal score scale
        """
        if self.intermediate.size == 0:
            self.xmin = self.xmax = self.dx = np.nan
            self.below_nominal = self.above_nominal = 0.
            return
        self.xmin = float(self.intermediate[0])
        self.xmax = float(self.intermediate[-1])
        if self.intermediate.size > 1:
            self.dx = (self.xmax - self.xmin) / (self.intermediate.size - 1)
        else:
            self.dx = 0.
        self.below_nominal = max(0., NOMINAL_RANGE[0] - self.xmin)
        self.above_nominal = max(0., self.xmax - NOMINAL_RANGE[1])
