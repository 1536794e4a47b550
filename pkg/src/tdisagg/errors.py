"""Exception and warning types raised across the package."""


class DisaggError(Exception):
    """Base class for all errors raised by tdisagg."""


class DomainError(DisaggError, ValueError):
    """A parameter lies outside its admissible domain."""


class ShapeError(DisaggError, ValueError):
    """Array dimensions are inconsistent."""


class InvalidGrid(DomainError):
    """The autoregressive grid is empty or contains values outside (-1, 1)."""


class DimensionRegimeError(DisaggError, ValueError):
    """A low-dimensional method was asked to fit d >= n_low indicators."""


class ParseError(DisaggError, ValueError):
    """An input file could not be parsed."""

    def __init__(self, message, path=None, line=None, column=None):
        self.path = path
        self.line = line
        self.column = column
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class NumericalError(DisaggError, ArithmeticError):
    """A factorization broke down (non-positive pivot)."""


class RankError(NumericalError):
    """The whitened design is column-rank deficient."""


class DegenerateDesignError(NumericalError):
    """Two active LARS columns are collinear."""


class DisaggWarning(UserWarning):
    """Base class for warnings emitted by tdisagg."""


class FallbackNotice(DisaggWarning):
    """The adaptive stage was skipped because the first stage selected nothing."""


class DegenerateColumnWarning(DisaggWarning):
    """A zero-variance indicator column was dropped by the correlation filter."""
