"""Exception types and the process exit codes they map to."""


class LocalityLabError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class DomainError(LocalityLabError, ValueError):
    """Input outside the mathematical domain of an operation."""

    exit_code = 2


class SchemaError(LocalityLabError, ValueError):
    """Malformed experiment configuration."""

    exit_code = 2


class CapacityError(LocalityLabError, MemoryError):
    """Requested Hilbert space exceeds the configured dense/sparse caps."""

    exit_code = 3


class ConvergenceError(LocalityLabError, ArithmeticError):
    """An iterative numerical routine failed to reach its tolerance.

    Parameters
    ----------
    message : str
    residuals : sequence of float, optional
        Residual norms at the point of failure.
    """

    exit_code = 4

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals) if residuals is not None else []


class UnsupportedError(LocalityLabError):
    """Operation needs data the caller did not provide (e.g. a full spectrum)."""

    exit_code = 2


EXIT_PASS = 0
EXIT_ASSERTION = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_CONVERGENCE = 4
