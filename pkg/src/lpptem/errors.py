"""Exception hierarchy shared across the toolkit."""


class LppError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(LppError, ValueError):
    """An input violates a documented precondition or invariant."""


class SamplingError(ValidationError):
    """A grid does not resolve the structure it must represent.

    The message names the violated rule and the required grid size/step.
    """


class GridMismatchError(ValidationError):
    """Two grids that must be commensurate are not."""


class SaturationError(LppError):
    """Detected counts at or above the coincidence-loss asymptote 1/theta."""


class EstimationError(LppError):
    """An estimator could not produce a result from the given data."""


class FitError(EstimationError):
    """An iterative fit failed to converge to a valid result."""


class RasterFormatError(LppError, OSError):
    """A raster file is malformed or uses an unsupported variant."""
