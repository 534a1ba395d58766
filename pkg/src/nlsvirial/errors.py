"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class DegenerateInputError(ValueError):
    """Input is well-typed but degenerate (zero profile, zero denominator)."""


class NumericalFailure(ArithmeticError):
    """Non-finite values or an unrecoverable step in an iterative method.

    Parameters
    ----------
    message : str
    iteration : int or None
        Iteration index at which the failure was detected.
    """

    def __init__(self, message: str, iteration: int | None = None):
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
        self.iteration = iteration
