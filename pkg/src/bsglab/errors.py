import typing


class LabError(Exception):
    pass


class ReferenceMismatch(LabError, ValueError):
    pass


class BudgetExceeded(LabError):
    def __init__(self, what: str, needed: int | float, cap: int | float):
        super().__init__(f"{what}: needs {needed}, budget allows {cap}")
        self.what = what
        self.needed = needed
        self.cap = cap


class HypothesisViolated(LabError):
    pass


class InvalidParameter(LabError, ValueError):
    pass


class EncodingOverflow(LabError, OverflowError):
    pass


class TheoremViolation(AssertionError):
    pass


class GoldenMismatch(LabError):
    def __init__(self, criterion: str, expected: typing.Any, actual: typing.Any):
        super().__init__(f"{criterion}: golden value {expected!r}, got {actual!r}")
        self.criterion = criterion
        self.expected = expected
        self.actual = actual
