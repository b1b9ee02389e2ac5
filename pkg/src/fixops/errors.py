"""Exception types shared across the package."""


class FixopsError(Exception):
    """Base class for all errors raised by fixops."""


class DimensionMismatchError(FixopsError, ValueError):
    """Two vectors or operators with incompatible dimensions were combined."""

    def __init__(self, expected, got, what="vector"):
        self.expected = expected
        self.got = got
        super().__init__(f"dimension mismatch: {what} has dimension {got}, expected {expected}")


class ZeroOperatorError(FixopsError, ValueError):
    """A nonzero linear map was required."""


class MissingNormError(FixopsError, ValueError):
    """A linear map is missing its cached spectral norm estimate."""

    def __init__(self):
        super().__init__(
            "linear map has no cached norm; call hilbert.estimate_norm(A) before building "
            "the Landweber transform"
        )


class SigmaEvaluationError(FixopsError, ValueError):
    """A relaxation function returned a nonpositive or nonfinite value.

    Carries the offending point in :attr:`point`.
    """

    def __init__(self, value, point):
        self.value = value
        self.point = point
        super().__init__(
            f"relaxation function returned {value!r} (must be finite and > 0) at point {point!r}"
        )


class CompositionUncertifiedError(FixopsError, ValueError):
    """A composition falls outside the certified parameter region."""


class FejerViolationError(FixopsError, AssertionError):
    """A certified monotone step moved the iterate away from the reference point."""

    def __init__(self, k, violation):
        self.k = k
        self.violation = violation
        super().__init__(
            f"Fejer monotonicity violated at iteration {k}: distance increased by {violation:.3e}"
        )


class ConfigError(FixopsError, ValueError):
    """An experiment configuration is malformed; names the offending field."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"config field '{field}': {message}")
