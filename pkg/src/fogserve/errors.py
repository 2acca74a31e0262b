"""Exception types shared across the package."""


class FogserveError(Exception):
    """Base class for all package-specific errors."""


class GraphFormatError(FogserveError):
    """A graph file failed to parse or violated a structural invariant."""


class ClosureError(FogserveError):
    """A layer computation was missing a required neighbor activation."""


class DimensionError(FogserveError):
    """Shapes of model weights, features or activations disagree."""


class FitError(FogserveError):
    """Regression fit is impossible (too few or degenerate observations)."""


class CodecError(FogserveError):
    """Packed-stream encoding or decoding failed."""
