"""Exception types shared across the package."""


class HmimoError(Exception):
    """Base class for all package errors."""


class UsageError(HmimoError, ValueError):
    """Invalid arguments or mismatched inputs."""


class NumericalError(HmimoError, ArithmeticError):
    """A numerical routine could not produce a finite, valid result."""


class RankZeroError(NumericalError):
    """Water-filling was asked to allocate power over an all-zero spectrum."""


class ConvergenceError(NumericalError):
    """Fixed-point iteration did not converge.

    Attributes
    ----------
    residual : float
        Residual of the last iterate.
    iterations : int
        Number of iterations performed.
    """

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
