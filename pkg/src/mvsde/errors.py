"""Exception types shared across the package."""


class MVSDEError(Exception):
    """Base class for all package-specific errors."""


class UnknownModel(MVSDEError):
    pass


class DimensionMismatch(MVSDEError):
    pass


class MissingConstant(MVSDEError):
    pass


class NonFiniteError(MVSDEError):
    """A NaN or infinity showed up where only finite values are allowed."""

    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time


class NonConvergence(MVSDEError):
    """The implicit-stage solver ran out of iterations."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NonCommensurate(MVSDEError):
    pass


class ShrinkNotAllowed(MVSDEError):
    pass


class SizeMismatch(MVSDEError):
    pass


class LineageMismatch(MVSDEError):
    pass


class CouplingViolation(MVSDEError):
    pass


class DegenerateFit(MVSDEError):
    pass


class ConfigInvalid(MVSDEError):
    """Bad experiment configuration; the message names the offending field."""
