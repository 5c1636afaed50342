"""Exception hierarchy."""


class HHCError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(HHCError, ValueError):
    """An argument is out of range or otherwise unusable."""


class InstanceError(HHCError, ValueError):
    """An instance violates its structural invariants."""


class ParseError(InstanceError):
    """An instance or solution file could not be decoded."""


class SchemaError(InstanceError):
    """A decoded file has inconsistent dimensions or invalid values."""


class GenerationError(HHCError, ValueError):
    """A generator configuration cannot produce a valid instance."""


class ModelBuildError(HHCError):
    """The MILP could not be built for the given instance."""


class ExtractionError(HHCError):
    """A variable assignment could not be mapped back to routes."""


class StructureError(ExtractionError):
    """The active arcs of an assignment do not form simple paths."""

    def __init__(self, message, arcs=()):
        super().__init__(message)
        self.arcs = list(arcs)


class RefusedInputError(HHCError, ValueError):
    """The input exceeds a solver's size guard."""
