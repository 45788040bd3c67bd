"""Exception hierarchy shared by every module."""


class PConvexError(Exception):
    """Base class for all errors raised by the package."""


class DomainError(PConvexError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ValidationError(PConvexError, ValueError):
    """A constructed object violates one of its invariants."""


class UnsupportedRegimeError(PConvexError, ValueError):
    """The operation is not defined for the requested exponent regime."""


class UnboundedBodyError(PConvexError, RuntimeError):
    """A gauge bracket kept growing past its cap; the body is not bounded."""


class DivergentSequenceError(PConvexError, ValueError):
    """A sequence set is unbounded in the d_p metric."""


class PreconditionError(PConvexError, ValueError):
    """A sampled boundary precondition failed.

    ``witness`` holds the offending point (and any extra values) so the
    failure can be replayed.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class RegistryError(PConvexError, KeyError):
    """Unknown registry key or malformed registry parameters."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""
