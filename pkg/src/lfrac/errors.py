"""Exception hierarchy shared by every module."""


class LFracError(Exception):
    """Base class for library errors."""


class NotConverged(LFracError):
    """A truncated series or iteration did not reach the requested tolerance."""

    def __init__(self, message: str, n_terms: int | None = None):
        super().__init__(message)
        self.n_terms = n_terms


class PoleError(LFracError, ValueError):
    """Gamma function evaluated at a non-positive integer."""


class DomainError(LFracError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class NoConvergence(LFracError):
    """The polynomial root iteration exhausted its sweep budget."""


class SingularWronskian(LFracError):
    """The wronskian at zero is numerically singular (duplicated atoms)."""


class AnsatzMismatch(LFracError):
    """The forcing cannot be matched by the undetermined-coefficient ansatz."""
