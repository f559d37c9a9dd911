"""
Exception hierarchy for adadkrr.

Every error is a ValueError so callers that only care about "bad input"
can keep catching that.
"""


class AdaDKRRError(ValueError):
    pass


class InputShapeError(AdaDKRRError):
    pass


class NumericalError(AdaDKRRError):
    pass


class UnsupportedDimensionError(AdaDKRRError):
    pass


class SplitError(AdaDKRRError):
    pass


class PartitionError(AdaDKRRError):
    pass


class DomainError(AdaDKRRError):
    pass


class WeightSumError(AdaDKRRError):
    pass


class DegenerateColumnError(AdaDKRRError):
    pass


class OutOfRangeError(AdaDKRRError):
    pass


class EmptyDataError(AdaDKRRError):
    pass


class DataParseError(AdaDKRRError):
    """Raised for a cell that cannot be read as required by the schema.

    :param row: zero-based data row (header excluded)
    :type row: int
    :param column: column name
    :type column: str
    """

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class MachineError(AdaDKRRError):
    """Wraps an error raised inside a local machine context."""

    def __init__(self, machine, error):
        super().__init__(f"machine {machine}: {error}")
        self.machine = machine
        self.error = error


class ConfigError(AdaDKRRError):
    pass
