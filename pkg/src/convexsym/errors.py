"""Exception types shared across the package."""


class ConvexSymError(Exception):
    """Base class for all library errors."""


class NonSmoothPoint(ConvexSymError):
    """Gradient requested on a ray where the gauge is not differentiable."""


class GridMismatch(ConvexSymError):
    """Two grid functions do not share the same grid geometry or mask."""


class DegeneratePolygon(ConvexSymError):
    """Polygon with repeated vertices, zero-length edges, or zero area."""


class QuadratureFailure(ConvexSymError):
    """Requested quadrature tolerance could not be met."""


class NonConvergence(ConvexSymError):
    """Fixed-point iteration hit the iteration cap before reaching tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class ConfigError(ConvexSymError):
    """Malformed configuration file or CLI argument combination."""
