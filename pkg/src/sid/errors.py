"""Exception types raised across the package.

Every error that callers are expected to catch derives from SidError, so
``except SidError`` at a boundary (e.g. the CLI) is enough to separate bad
input from genuine bugs.
"""


class SidError(Exception):
    """Base class for all errors raised by this package."""


class DataError(SidError):
    """A dataset or raw input failed validation."""


class NonPositiveTime(DataError):
    """An observed time is not a finite positive number."""


class NonBinaryStatus(DataError):
    """A censoring indicator is something other than 0 or 1."""


class InconsistentDimension(DataError):
    """Covariate vectors do not all share the same length."""


class NoEvents(DataError):
    """The dataset contains no uncensored observation."""


class TooFewObservations(DataError):
    """The dataset is smaller than the minimum supported size."""


class MissingColumn(DataError):
    """A requested column is absent from the CSV header."""


class ParseError(DataError):
    """A CSV cell could not be parsed; carries the offending row and column."""

    def __init__(self, row: int, col: str, message: str):
        super().__init__(f"row {row}, column {col!r}: {message}")
        self.row = row
        self.col = col


class DimensionMismatch(SidError):
    """Two covariate vectors of different lengths were compared."""


class DegenerateCovariates(SidError):
    """The covariate sample carries no scale (median pairwise distance 0)."""


class DegenerateTimes(SidError):
    """The observed times have zero sample standard deviation."""


class InstanceTooLarge(SidError):
    """A brute-force reference implementation was asked for too large an n."""


class BadMultiplier(SidError):
    """A wild-bootstrap multiplier vector is not composed of +/-1 entries."""


class UnknownScenario(SidError):
    """A scenario id is not in the registry."""


class UncalibratedCensoring(SidError):
    """A scenario with a target censoring rate was sampled before calibration."""


class BracketFailure(SidError):
    """The censoring calibration target is unreachable inside the bracket."""


class CalibrationNotApplicable(SidError):
    """The scenario's censoring law is fully specified; nothing to calibrate."""
