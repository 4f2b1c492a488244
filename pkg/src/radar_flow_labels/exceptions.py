"""Error types raised by the labeling pipeline.

Everything subclasses ValueError so callers that only care about "bad input"
can catch one type; the CLI maps these to the data-error exit code.
"""


class RadarFlowError(ValueError):
    """Base class for all pipeline data errors."""


class FrameValidationError(RadarFlowError):
    """A frame violates a structural invariant (empty scan, bad extrinsic, ...)."""


class FrameFormatError(RadarFlowError):
    """A frame, flow or manifest file could not be parsed."""


class SceneSpecError(RadarFlowError):
    """A synthetic scene description is empty, unknown or malformed."""


class ReferenceFrameError(RadarFlowError):
    """The next-frame point set needed for Chamfer arbitration is empty."""


class ConfigError(RadarFlowError):
    """The pipeline configuration file is malformed or has unknown keys."""
