"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or out-of-range input."""


class DimensionMismatchError(InputError):
    """Vector or matrix shape does not match the ambient dimension."""


class DegenerateInputError(InputError):
    """Input is identically zero where a direction is required."""


class PreconditionError(InputError):
    """A documented precondition of the operation is violated."""


class NotAContractionError(InputError):
    """Matrix exceeds the unit operator-norm ball."""


class UnsupportedShapeError(InputError):
    """Operator lies outside the class this routine handles exactly."""


class OutOfDomainError(InputError):
    """Argument outside the domain of the formula."""


class RangeOverflowError(InputError):
    """Evaluation would leave the floating-point range."""


class HypothesisNotMetError(RuntimeError):
    """The smallness hypothesis of a bound fails, so the bound is undefined.

    Deliberately not an :class:`InputError`: the inputs are well formed,
    the mathematics simply does not apply to them.
    """


class ConsistencyError(RuntimeError):
    """Two independent evaluation paths disagreed beyond tolerance."""
