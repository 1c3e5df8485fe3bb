"""Exception hierarchy shared by all pinlab modules."""


class PinlabError(Exception):
    """Base class for all toolkit errors."""


class InvalidParameterError(PinlabError, ValueError):
    """An argument violates a constructor or operation precondition."""


class DomainError(PinlabError, ValueError):
    """The requested quantity is undefined at the given parameters."""


class PrecisionError(PinlabError):
    """A certified tolerance could not be met within the configured budget.

    ``required_horizon``, when set, estimates the series horizon that a
    retry would need.
    """

    def __init__(self, message, required_horizon=None):
        super().__init__(message)
        self.required_horizon = required_horizon


class UndecidedError(PinlabError):
    """A tri-state diagnostic came back 'undecided' where a number was needed."""


class InternalConsistencyError(PinlabError):
    """Two redundant computations of the same quantity disagree."""
