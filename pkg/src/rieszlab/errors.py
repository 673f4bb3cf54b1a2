"""Exception types raised by rieszlab."""


class RieszLabError(Exception):
    """Base class for all library errors."""


class ToleranceNotMet(RieszLabError):
    """Adaptive integration ran out of subdivisions.

    The best value and its error estimate are attached so callers can
    decide whether the result is still usable.
    """

    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class RegimeViolation(RieszLabError):
    """Operation requires a different (d, s) regime, e.g. s < d - 1."""


class InvalidPower(RieszLabError):
    """Kernel power is not locally integrable in dimension d."""


class UnsupportedDimension(RieszLabError):
    pass


class UnsupportedBall(RieszLabError):
    pass


class NegativityViolation(RieszLabError):
    """A nonnegative measure was required but a signed one was given."""


class NoWitness(RieszLabError):
    pass


class RouteDisagreement(RieszLabError):
    """Two independent evaluation routes differ by more than allowed."""


class NormalizationFailure(RieszLabError):
    pass
