"""Exception and warning types raised across the package."""


class SchrolabError(Exception):
    """Base class for all package errors."""


class InvalidParams(SchrolabError, ValueError):
    pass


class InvalidConfig(SchrolabError, ValueError):
    pass


class EmptySample(SchrolabError, ValueError):
    pass


class RegimeViolation(SchrolabError):
    """A check was requested outside the parameter regime where it is claimed."""

    def __init__(self, message, params=None, precondition=None):
        super().__init__(message)
        self.params = params
        self.precondition = precondition


class NoConvergence(SchrolabError):
    pass


class ConvergenceFailure(SchrolabError):
    pass


class QuadratureFailure(SchrolabError):
    pass


class FitFailure(SchrolabError):
    pass


class UnresolvedScale(SchrolabError):
    pass


class StepFailure(SchrolabError):
    pass


class SpectrumHit(SchrolabError, ValueError):
    pass


class TruncationWarning(UserWarning):
    """Monitored expansion tail is too large relative to the returned value."""
