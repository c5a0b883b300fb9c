"""
This file is part of corpus-align.

It defines a set of methods which are useful for plotting alignment
curves (and labeling the plots).

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""
import warnings

import numpy as np

from .errors import CorpusAlignException

try:
    import matplotlib
    matplotlib.use('Agg')
    import matplotlib.pyplot as plt
    matplotlib_installed = True
except ImportError:
    matplotlib_installed = False


class Plotter(object):
    """
    Class which is used for plotting learned alignment functions
    (and labeling the plots)
    """

    def __init__(self, reference_name):
        """
        Initialize the object

        Parameters
        ----------
        reference_name: string
           Name of the reference dataset (for labeling purposes)
        """
        # Default fontsize
        self.fontsize = 12
        self.reference_name = reference_name

    def show_alignment_curves(self, curves, path, oracle=None):
        """
        Plot the alignment function of every dataset, each over the
        intermediate scores observed on its training data, and save the
        figure as SVG

        Parameters
        ----------
        curves: list of AlignmentCurve

        path: string
            Output file

        oracle: OracleBundle, optional
            When given, the generating distortions are drawn as dashed
            lines over the same ranges
        """
        check_matplotlib()
        matplotlib.rcParams['svg.hashsalt'] = 'corpus-align'
        fig, ax = plt.subplots(figsize=(6, 5))
        lo = min(c.xmin for c in curves)
        hi = max(c.xmax for c in curves)
        ax.plot([lo, hi], [lo, hi], color='0.6', lw=0.8, ls=':',
                label='identity')
        for curve in curves:
            line, = ax.plot(curve.intermediate, curve.aligned, lw=1.5,
                            label=curve.name)
            if oracle is not None and not curve.is_reference:
                truth = oracle.distortions[curve.name](curve.intermediate)
                ax.plot(curve.intermediate, truth, lw=1., ls='--',
                        color=line.get_color())
        ax.set_xlabel('Intermediate score (%s scale)' % self.reference_name,
                      fontsize=self.fontsize)
        ax.set_ylabel('Dataset score', fontsize=self.fontsize)
        ax.set_title('Learned dataset score alignment functions',
                     fontsize=self.fontsize)
        ax.legend(fontsize=self.fontsize - 2)
        ax.grid(True, lw=0.3)
        fig.savefig(path, format='svg', metadata={'Date': None})
        plt.close(fig)

    def curve_table(self, curves):
        """Stack the curves as rows (dataset, intermediate, aligned, fitted)."""
        rows = []
        for curve in curves:
            fitted = (curve.fitted(curve.intermediate)
                      if curve.fitted is not None
                      else np.full(len(curve), np.nan))
            for x, y, z in zip(curve.intermediate, curve.aligned, fitted):
                rows.append((curve.name, x, y, z))
        return rows


def check_matplotlib():
    """Raise error messages or warnings when potential issues with
    matplotlib are detected."""
    if not matplotlib_installed:
        raise CorpusAlignException(
            'Failed to import the corpus-align plotter.\n'
            '(Make sure that matplotlib is installed.)')
    elif 'agg' not in matplotlib.get_backend().lower():
        warnings.warn('matplotlib is not using a non-interactive backend; '
                      'saving figures may open windows.')
