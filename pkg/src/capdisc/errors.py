"""Exception types shared across the package."""


class CapDiscError(ValueError):
    """Base class for all errors raised by this package."""


class DegeneracyError(CapDiscError):
    """A visited column subset is numerically rank deficient.

    The enumeration formula requires every subset of at most d points to be
    linearly independent. When a Gram factorization pivot falls below the
    tolerance, the offending index set is reported here.

    Attributes
    ----------
    index_set : tuple of int or None
        1-based point indices of the offending subset, when known.
    """

    def __init__(self, message, index_set=None):
        super().__init__(message)
        self.index_set = tuple(index_set) if index_set is not None else None


class DimensionError(CapDiscError):
    """The requested operation is not defined for this ambient dimension."""


class NormalizationError(CapDiscError):
    """Input points are required to lie on the unit sphere but do not."""


class PointSetFormatError(CapDiscError):
    """A point-set file could not be parsed.

    Attributes
    ----------
    row, col : int or None
        0-based location of the offending entry, when known.
    """

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col
