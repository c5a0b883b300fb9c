"""
This file is part of corpus-align.

It defines the exceptions raised by the package.

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""


class CorpusAlignException(Exception):
    """
    Base class of all the errors raised by corpus-align

    The command-line interface catches this class (and only this class,
    apart from I/O errors) and reports it as a single-line diagnostic.
    """
    pass


class ShapeError(CorpusAlignException, ValueError):
    """Array dimensions do not match a layout or each other."""
    pass


class NumericError(CorpusAlignException, ArithmeticError):
    """A loss, gradient or parameter is not finite."""
    pass


class IndicatorError(CorpusAlignException, IndexError):
    """A dataset indicator or dataset name is unknown to the model."""
    pass


class ConfigurationError(CorpusAlignException, ValueError):
    """A configuration, manifest or checkpoint is inconsistent."""
    pass


class UndefinedCorrelationError(CorpusAlignException, ArithmeticError):
    """A correlation was requested for a vector with zero variance."""
    pass


class PairingError(CorpusAlignException, ValueError):
    """Two sets of predictions do not refer to the same test items."""
    pass


class DegenerateFitError(CorpusAlignException, ValueError):
    """A fit was requested on data that cannot determine it."""
    pass
