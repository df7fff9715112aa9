"""Exception types shared across the package."""


class OrdmechError(Exception):
    """Base class for all package errors."""


class MetricError(OrdmechError):
    """A distance matrix or metric violates a structural requirement."""


class ProfileError(OrdmechError):
    """A preference profile is malformed or unsuitable for the operation."""


class InvalidCostError(OrdmechError):
    """Requested cost functional is not supported (e.g. a median distance cost)."""


class SearchSpaceError(OrdmechError):
    """An exhaustive search would exceed its candidate budget."""


class SolverError(OrdmechError):
    """An omniscient solver failed or was applied to an unsupported problem."""


class UnboundedObjectiveError(OrdmechError):
    """The requested audit objective has unbounded worst-case distortion."""


class InternalInvariantError(OrdmechError):
    """A condition guaranteed by construction failed; indicates a bug."""


class SchemaError(OrdmechError):
    """An instance or report file violates the documented schema."""

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
