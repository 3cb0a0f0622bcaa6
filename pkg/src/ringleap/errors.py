"""Exception types shared across the package."""


class RingleapError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(RingleapError):
    """Malformed or out-of-contract input (grids too coarse, bad ranges)."""


class CollisionError(RingleapError):
    """Ring centers closer than the collision threshold."""

    def __init__(self, message, pair=None, separation=None):
        super().__init__(message)
        self.pair = pair
        self.separation = separation


class OrthogonalityError(RingleapError):
    """Mode-1 datum violates the Fredholm orthogonality condition."""

    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class ConvergenceError(RingleapError):
    """Iterative computation failed to reach its tolerance."""

    def __init__(self, message, iterates=None, residual=None):
        super().__init__(message)
        self.iterates = iterates
        self.residual = residual


class ResolutionError(RingleapError):
    """Vortex core too small for the grid spacing."""


class DomainError(RingleapError):
    """Field support touches or leaves the computational domain."""


class CFLError(RingleapError):
    """Characteristic displacement exceeds the hard per-substep limit."""


class LostRingError(RingleapError):
    """Centroid window no longer contains appreciable vorticity."""


class WindowOverlapError(RingleapError):
    """Centroid windows of distinct rings intersect."""


class ConfigError(RingleapError):
    """Scenario configuration is invalid.

    ``field`` carries the offending field path, ``offset`` the byte
    offset for JSON parse errors.
    """

    def __init__(self, message, field=None, offset=None):
        super().__init__(message)
        self.field = field
        self.offset = offset
