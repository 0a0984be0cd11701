"""Exception and warning classes.

Two families: :class:`InputError` for malformed or out-of-range input
(CLI exit code 1) and :class:`EstimatorError` for estimator preconditions
that the data fail to meet (CLI exit code 2).
"""


class ForecastValError(Exception):
    """Base class for all package errors."""


class InputError(ForecastValError, ValueError):
    """Invalid input data or arguments."""


class EstimatorError(ForecastValError, ValueError):
    """An estimator's precondition is not met by the data."""


class DomainError(InputError):
    """A probability lies outside the domain of the loss."""


class ParseError(InputError):
    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class ValidationError(ParseError):
    pass


class DuplicateKeyError(ParseError):
    pass


class InvalidBinsError(InputError):
    pass


class EmptyHistoryError(InputError):
    pass


class MissingFieldError(InputError):
    pass


class MissingLabelError(InputError):
    def __init__(self, keys):
        self.keys = list(keys)
        shown = ", ".join(f"(t={t}, k={k})" for t, k in self.keys[:10])
        more = "" if len(self.keys) <= 10 else f" and {len(self.keys) - 10} more"
        super().__init__(f"records without a bucket label: {shown}{more}")


class NoLinearEquivalentError(EstimatorError):
    pass


class MissingBucketError(EstimatorError):
    pass


NoBucketError = MissingBucketError


class CellTooSmallError(EstimatorError):
    def __init__(self, cell, size, required):
        self.cell = cell
        self.size = size
        self.required = required
        where = "cell" if cell is None else f"cell (t={cell[0]}, j={cell[1]!r})"
        super().__init__(f"{where} has {size} record(s); at least {required} required")


class ZeroDenominatorError(EstimatorError):
    pass


class DegenerateWeightError(EstimatorError):
    def __init__(self, keys):
        self.keys = list(keys)
        shown = ", ".join(f"(t={t}, k={k})" for t, k in self.keys[:10])
        more = "" if len(self.keys) <= 10 else f" and {len(self.keys) - 10} more"
        super().__init__(
            f"Winkler weight l(p_hat, p_clim) is zero at: {shown}{more}"
        )


class SkippedAllError(EstimatorError):
    pass


class NonConstantTruePError(EstimatorError):
    pass


class TooLargeError(InputError):
    pass


class EmptyBinWarning(UserWarning):
    pass


class SingletonCellWarning(UserWarning):
    pass


class NegativeVarianceWarning(UserWarning):
    """A variance estimate came out negative and was clamped to zero."""
