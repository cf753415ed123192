"""Exception hierarchy shared by every analysis module."""


class HpiBubbleError(Exception):
    """Base class for user-facing errors (the CLI maps these to exit code 1)."""


class MalformedInput(HpiBubbleError, ValueError):
    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.row = row
        self.column = column


class GapError(MalformedInput):
    """A region's span has a missing month."""

    def __init__(self, region, month):
        super().__init__(f"region {region!r} has no value for {month}")
        self.region = region
        self.month = month


class DomainError(HpiBubbleError, ValueError):
    pass


class InsufficientData(HpiBubbleError, ValueError):
    pass


class RangeError(HpiBubbleError, IndexError):
    pass


class SingularityError(HpiBubbleError, ArithmeticError):
    pass


class NoConvergence(HpiBubbleError, RuntimeError):
    """Every start of a multi-start fit hit its evaluation budget.

    The best-effort result is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NoCrossoverError(HpiBubbleError, ValueError):
    pass


class NotApplicable(HpiBubbleError, ValueError):
    pass


class DegenerateRegression(HpiBubbleError, ValueError):
    pass
