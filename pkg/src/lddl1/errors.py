"""Exception and warning types shared across the package."""


class LddError(Exception):
    """Base class for errors raised by this package."""


class NotPositiveDefinite(LddError, ArithmeticError):
    """A Cholesky factorization hit a pivot at or below the threshold.

    Usually means the weight matrix whose Gram was factored is rank deficient.
    """


class DimensionMismatch(LddError, ValueError):
    pass


class TooFewVectors(LddError, ValueError):
    pass


class DegenerateDirection(LddError, ArithmeticError):
    pass


class EmptyCorpus(LddError, ValueError):
    pass


class EmptyTrainingSet(LddError, ValueError):
    pass


class LengthMismatch(LddError, ValueError):
    pass


class VocabMismatch(LddError, ValueError):
    pass


class ParseError(LddError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ShapeError(ParseError):
    pass


class ConvergenceWarning(UserWarning):
    """An iterative solver stopped at its iteration cap."""
