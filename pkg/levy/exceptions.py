# levy/exceptions.py


class HeavyTailError(Exception):
    """Base class for every error raised by the heavytail library."""


class ModelDomainError(HeavyTailError, ValueError):
    """A model parameter or argument lies outside its domain."""


class PathError(HeavyTailError, ValueError):
    """A path was constructed or evaluated with invalid data."""


class PreconditionError(HeavyTailError, ValueError):
    """An operation was called without its documented precondition."""


class CorridorError(HeavyTailError, ValueError):
    """Corridor data violates l < u or l(0) < 0 < u(0)."""


class BudgetExceededError(HeavyTailError, RuntimeError):
    """An exhaustive search would exceed its enumeration budget."""


class QuadratureError(HeavyTailError, RuntimeError):
    """Numerical integration did not reach the requested tolerance."""


class NoAcceptanceError(HeavyTailError, RuntimeError):
    """The rejection sampler exhausted its proposals without accepting."""

    def __init__(self, tries, accepted=0):
        self.tries = tries
        self.accepted = accepted
        super().__init__(f"No proposal accepted after {tries} tries (accepted={accepted}).")
