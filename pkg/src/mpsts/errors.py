"""Exception hierarchy shared by all modules."""


class MpstsError(Exception):
    """Base class for every error raised by the package."""


class ParameterError(MpstsError, ValueError):
    """A parameter lies outside its allowed domain."""


class InsufficientDataError(MpstsError, ValueError):
    """Too few samples (or degenerate samples) for the requested statistic."""


class UnphysicalDataError(MpstsError, ValueError):
    """Measured moments cannot come from the assumed detector model."""


class EstimationError(MpstsError, RuntimeError):
    """A fit or inference step failed to produce a usable estimate."""


class DegenerateModelError(EstimationError):
    """The Fisher information is singular at the requested parameters."""
