"""Exception hierarchy shared by all plflow modules."""


class PLFlowError(Exception):
    pass


# complex
class DuplicateVertexInTet(PLFlowError, ValueError):
    pass


class VertexIndexOutOfRange(PLFlowError, ValueError):
    pass


class EmptyComplex(PLFlowError, ValueError):
    pass


class UnknownBuiltin(PLFlowError, KeyError):
    pass


# geometry / curvature
class InvalidTriangle(PLFlowError, ValueError):
    pass


class DegenerateTet(PLFlowError, ValueError):
    pass


class DegenerateMetric(PLFlowError, ValueError):
    """A metric fails nondegeneracy; ``tet`` is the first offending tetrahedron."""

    def __init__(self, tet, message=None):
        self.tet = tet
        super().__init__(message or f"metric is degenerate at tetrahedron {tet}")


class DimensionMismatch(PLFlowError, ValueError):
    pass


class StepTooLarge(PLFlowError, ValueError):
    pass


class NotEinstein(PLFlowError, ValueError):
    pass


class OutOfModelRange(PLFlowError, ValueError):
    pass


# flows
class TraceTooShort(PLFlowError, ValueError):
    pass


class MissingSnapshots(PLFlowError, ValueError):
    pass


# io
class MeshFormatError(PLFlowError, ValueError):
    pass
