"""Exception hierarchy shared across lglab."""


class LGLabError(Exception):
    """Base class for all lglab errors."""


class ConfigurationError(LGLabError):
    """Bad parameters, unknown identifiers, or an invalid configuration."""


class DomainError(LGLabError, ValueError):
    """Arguments outside an operation's domain (shapes, indices, emptiness)."""


class InvalidInputError(LGLabError, ValueError):
    """Inputs that are well formed but mathematically unacceptable."""


class CapabilityError(LGLabError):
    """The request exceeds a documented size limit of an exact method."""


class SolverError(LGLabError):
    """An iterative method failed to converge."""

    def __init__(self, message, exploitability=None):
        super().__init__(message)
        self.exploitability = exploitability


class InternalError(LGLabError):
    """A state that should be impossible was reached."""
