"""Exception types raised by porodarcy."""


class PorodarcyError(Exception):
    """Base class for all package errors."""


class MeshError(PorodarcyError, ValueError):
    """Invalid mesh data or arguments to a mesh generator."""


class DegenerateElementError(PorodarcyError):
    """Element with a nonpositive Jacobian determinant."""


class NonpositiveDragError(PorodarcyError):
    """Drag law evaluated outside its valid range (1 + beta*p <= 0, or overflow)."""


class ModelBreakdownError(PorodarcyError):
    """A closed-form solution has no real value for the given parameters."""


class ProblemError(PorodarcyError, ValueError):
    """Inconsistent problem definition (boundary sets, pins, sources)."""


class CompatibilityError(ProblemError):
    """Pure-flux problem whose boundary flux and sources do not balance."""


class SourcePlacementError(ProblemError):
    """Point source that does not sit on a mesh node."""


class UnsupportedGeometryError(ProblemError):
    """Strong normal-velocity condition on a facet that is not axis aligned."""


class LinearSolveError(PorodarcyError):
    """Failure of the sparse linear solver."""


class ConfigError(PorodarcyError, ValueError):
    """Run configuration that cannot be parsed or type checked."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
