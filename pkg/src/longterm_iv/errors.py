"""Exception hierarchy shared by every module in the package."""


class ValidationError(ValueError):
    """Invalid parameters, shapes or configuration."""


class InvertibilityError(ValidationError):
    """A polynomial coupling is not monotone on the support it is used on."""


class DegenerateError(ArithmeticError):
    """A quantity that must be divided by is (numerically) zero."""

    def __init__(self, message, denom=None):
        super().__init__(message)
        self.denom = denom


class DegenerateRegressorError(DegenerateError):
    pass


class NearPoleError(DegenerateError):
    """The instrumental denominator fell below the absolute tolerance."""


class UnstableDenominatorError(DegenerateError):
    """The sample mean of X is indistinguishable from zero (mu_w ~ 0)."""


class WeakInstrumentError(DegenerateError):
    """The prior instrument V carries no detectable signal about X."""


class SingularDesignError(DegenerateError):
    pass


class PoleError(DegenerateError):
    """A closed-form expression is evaluated exactly on its pole."""
