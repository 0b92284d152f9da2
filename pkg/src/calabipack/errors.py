"""Exception hierarchy.

Every error raised by the library derives from :class:`CalabiPackError`; the
CLI maps each concrete class to its own exit code (see ``cli.EXIT_CODES``).
"""


class CalabiPackError(Exception):
    """Base class for all library errors."""


class MeshError(CalabiPackError):
    """Invalid triangulation."""


class BoundaryEdge(MeshError):
    pass


class DegenerateFace(MeshError):
    pass


class NonManifold(MeshError):
    pass


class DomainError(CalabiPackError, ValueError):
    """An argument lies outside the domain of the formula."""


class TriangleInequalityViolation(CalabiPackError, ValueError):
    def __init__(self, message, face=None):
        super().__init__(message)
        self.face = face


class DimensionMismatch(CalabiPackError, ValueError):
    pass


class ConvergenceFailure(CalabiPackError):
    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class NoConvergence(CalabiPackError):
    def __init__(self, message, residual=None, iterations=None, u=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.u = u


class BlowupGuard(CalabiPackError):
    """Some u_i approached 0 from below, i.e. a radius is running off to infinity."""

    def __init__(self, message, vertex=None, u=None):
        super().__init__(message)
        self.vertex = vertex
        self.u = u


class StepFailure(CalabiPackError):
    pass


class QuadratureFailure(CalabiPackError):
    pass


class ParseError(CalabiPackError):
    pass


class FileError(CalabiPackError):
    pass
