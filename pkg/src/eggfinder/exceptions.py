"""Exception types shared across the package."""


class EggFinderError(Exception):
    """Base class for errors raised by this package."""


class DegenerateSeries(EggFinderError, ValueError):
    """A series is constant (zero variance) or too short to standardize."""


class TooFewObservations(EggFinderError, ValueError):
    """An operation needs more rows than the input provides."""


class InvalidPValue(EggFinderError, ValueError):
    """A p-value fell outside [0, 1]."""


class LabelLengthMismatch(EggFinderError, ValueError):
    """Group labels do not line up with the rows of the data matrix."""


class TooManyEdges(EggFinderError, ValueError):
    """Requested edge count exceeds the maximum for an acyclic graph."""


class SingularParentContribution(EggFinderError, ValueError):
    """Drawn parent coefficients give a zero-variance combined contribution."""


class CsvFormatError(EggFinderError, ValueError):
    """A CSV cell or row cannot be parsed; the message names the location."""

    def __init__(self, message: str, *, line: int | None = None, column: str | None = None):
        super().__init__(message)
        self.line = line
        self.column = column


class ConstantColumnWarning(UserWarning):
    """A constant data column was excluded before scoring."""
