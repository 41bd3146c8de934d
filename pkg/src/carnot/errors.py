"""Exception types shared across the toolkit."""


class CarnotError(Exception):
    """Base class for all toolkit errors."""


class InputError(CarnotError, ValueError):
    """Malformed or dimensionally incompatible input."""


class NotNilpotentError(CarnotError):
    """Descending central sequence failed to reach zero."""


class OptimizerFailure(CarnotError):
    """Path optimizer could not reach endpoint tolerance.

    Carries the best infeasible path found so a caller can inspect it;
    the associated length is NOT a valid upper bound.
    """

    def __init__(self, message, best_path=None, residual=None):
        super().__init__(message)
        self.best_path = best_path
        self.residual = residual


class CalibrationError(CarnotError):
    """Ball-box calibration failed on one or more samples."""

    def __init__(self, message, failed_samples=()):
        super().__init__(message)
        self.failed_samples = list(failed_samples)


class LipschitzViolation(CarnotError):
    """A declared Lipschitz distance violated its contract on a sampled pair."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class UnreachableError(CarnotError):
    """Layer-1 bracket words fail to span a layer: not bracket generating."""
