"""Shared exception types."""


class QuadratureError(RuntimeError):
    """A quadrature failed to reach its accuracy target.

    Carries the achieved error estimate so callers can report it.
    """

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class ResolutionError(ValueError):
    """Grid spacing too coarse for the feature it must resolve."""


class BoundaryLayerError(ValueError):
    """Field does not decay near the bounding box, so the zero-extension
    tail term would misrepresent it."""
