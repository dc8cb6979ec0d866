"""Exception types shared across the toolkit."""


class TochkitError(Exception):
    """Base class for all toolkit errors."""


class InvalidMesh(TochkitError):
    pass


class InvalidDirection(TochkitError):
    pass


class GridTooSmall(TochkitError):
    pass


class DegenerateConfiguration(TochkitError):
    pass


class ModelMismatch(TochkitError):
    pass


class InvalidSurfacePoint(TochkitError):
    pass


class InvalidEpsilon(TochkitError):
    pass


class WeightMismatch(TochkitError):
    pass


class PointSetMismatch(TochkitError):
    pass


class ShapeMismatch(TochkitError):
    pass


class InvalidInitialization(TochkitError):
    pass
