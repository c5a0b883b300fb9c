"""
This file is part of corpus-align.

It defines the MonotoneCubic class: third-degree polynomials used both as
corpus-effect distortions in the simulator and as smooth approximations
of learned alignment functions.

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""
import numpy as np
from numpy.polynomial import Polynomial

from .errors import ConfigurationError

NOMINAL_RANGE = (1., 5.)
GRID_POINTS = 1000


class MonotoneCubic(object):
    """
    p(s) = c0 + c1 s + c2 s^2 + c3 s^3

    Attributes
    ----------
    coefficients: 1darray of 4 floats, in ascending degree
    """

    def __init__(self, coefficients):
        c = np.zeros(4)
        coefficients = np.asarray(coefficients, dtype=np.float64).ravel()
        if coefficients.size > 4:
            raise ConfigurationError('A cubic has at most 4 coefficients, '
                                     'got %d' % coefficients.size)
        c[:coefficients.size] = coefficients
        self.coefficients = c
        self._poly = Polynomial(c)
        self._deriv = self._poly.deriv()

    @classmethod
    def identity(cls):
        return cls([0., 1., 0., 0.])

    def __call__(self, s):
        return self._poly(np.asarray(s, dtype=np.float64))

    def derivative(self, s):
        return self._deriv(np.asarray(s, dtype=np.float64))

    def min_derivative(self, lo=NOMINAL_RANGE[0], hi=NOMINAL_RANGE[1],
                       n_points=GRID_POINTS):
        """Smallest p' over an `n_points` grid spanning [lo, hi]."""
        return float(np.min(self.derivative(np.linspace(lo, hi, n_points))))

    def is_monotone(self, lo=NOMINAL_RANGE[0], hi=NOMINAL_RANGE[1],
                    n_points=GRID_POINTS):
        """True when p' > 0 on every point of the grid."""
        return self.min_derivative(lo, hi, n_points) > 0.

    def max_deviation(self, other, lo=NOMINAL_RANGE[0], hi=NOMINAL_RANGE[1],
                      n_points=GRID_POINTS):
        """
        max |p(s) - other(s)| over a grid spanning [lo, hi]

        `other` is any vectorized callable (default: the identity).
        """
        grid = np.linspace(lo, hi, n_points)
        return float(np.max(np.abs(self(grid) - other(grid))))

    def to_list(self):
        return [float(c) for c in self.coefficients]

    def __repr__(self):
        return 'MonotoneCubic(%s)' % ', '.join('%.6g' % c
                                               for c in self.coefficients)
