"""Exception and warning types raised across polyfreq."""


class PolyfreqError(Exception):
    """Base class for all polyfreq errors."""


class InvalidPolygon(PolyfreqError, ValueError):
    pass


class DegenerateRadius(PolyfreqError, ValueError):
    """The vertex barycenter coincides with a vertex."""


class Unsupported(PolyfreqError, ValueError):
    pass


class DegenerateTriangle(PolyfreqError, ValueError):
    """Three consecutive vertices are collinear."""


class Degenerate(PolyfreqError, ValueError):
    pass


class StepRejected(PolyfreqError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class FrameMismatch(PolyfreqError, ValueError):
    """A symmetrization frame does not lie on the boundary of the mesh."""


class SolverError(PolyfreqError, RuntimeError):
    pass


class NoConvergence(PolyfreqError, RuntimeError):
    pass


class DomainError(PolyfreqError, ValueError):
    pass


class NoEquilibrium(PolyfreqError, ValueError):
    pass


class ConvexityNotGuaranteed(UserWarning):
    pass


class AccuracyWarning(UserWarning):
    pass
