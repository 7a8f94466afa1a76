"""Exception types shared across the package."""


class ParameterDomainError(ValueError):
    """A distribution or model parameter lies outside its support."""


class NumericalSingularityError(ArithmeticError):
    """A matrix factorization failed even after diagonal jitter.

    ``min_diag`` carries the smallest diagonal entry of the offending matrix.
    """

    def __init__(self, message, min_diag=float("nan"), iteration=None):
        super().__init__(message)
        self.min_diag = min_diag
        self.iteration = iteration


class DegenerateEBError(ValueError):
    """Empirical-Bayes update requested on an all-zero coefficient vector."""


class ConfigurationError(ValueError):
    """Invalid driver configuration (fold sizes, grids, file contents)."""
