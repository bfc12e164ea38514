"""Exception hierarchy shared across the package."""


class TrajscError(Exception):
    """Base class for all package errors."""


class DegenerateTrajectory(TrajscError, ValueError):
    """A trajectory has zero arc length or otherwise cannot be aligned."""


class DegenerateCorrespondences(TrajscError, ValueError):
    """Correspondences do not constrain the requested transform."""


class InvalidMatrix(TrajscError, ValueError):
    """A distance matrix is asymmetric, negative, or malformed."""


class TooFewSamples(TrajscError, ValueError):
    pass


class InapplicableModifier(TrajscError, ValueError):
    pass


class SamplerExhausted(TrajscError, RuntimeError):
    pass
