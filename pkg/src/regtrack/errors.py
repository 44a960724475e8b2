"""Exception hierarchy. Each class maps onto one CLI exit code."""


class RegtrackError(Exception):
    exit_code = 1


class StructuralError(RegtrackError, ValueError):
    """Matrix dimensions do not fit together."""

    exit_code = 2


class ValidationError(RegtrackError, ValueError):
    """Input is well-formed but violates a model invariant (rank, width, ...)."""

    exit_code = 2


class SolvabilityError(RegtrackError):
    """The regulator equations have no solution for this plant/exosystem pair."""

    exit_code = 3

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class PreconditionError(RegtrackError):
    """An operation was called on a system outside its domain."""

    exit_code = 4


class NumericalError(RegtrackError):
    """A structural result could not be recovered at working precision."""

    exit_code = 4
