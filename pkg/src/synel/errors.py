"""Exception types shared across the package."""


class SynelError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SynelError, ValueError):
    """Invalid configuration: bad parameter values, shapes, or ranges."""


class DataError(SynelError, ValueError):
    """Invalid input data: non-finite values, malformed files, shape mismatch."""


class InvalidWeightsError(SynelError, ValueError):
    """Weight vector is unusable: all zero, negative, or non-finite entries."""


class NotPositiveDefiniteError(SynelError, ValueError):
    """A matrix required to be positive definite failed its Cholesky factorization."""


class SimulationError(SynelError, RuntimeError):
    """A simulator call failed; carries the replicate index for diagnosis."""

    def __init__(self, message, replicate=None):
        super().__init__(message)
        self.replicate = replicate


class DegenerateSampleError(SynelError, RuntimeError):
    """A sampler produced an unusable result (all-zero weights, dead chain, ...)."""


class NoEstimateError(SynelError, RuntimeError):
    """A search finished without visiting any state with an estimable objective."""
