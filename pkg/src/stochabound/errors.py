"""Exception hierarchy shared by all stochabound modules."""


class StochaboundError(Exception):
    """Base class for every error raised by this package."""


class InputError(StochaboundError, ValueError):
    """Malformed or out-of-range input."""


class DimensionError(InputError):
    """Array shapes do not agree."""


class SymmetryError(InputError):
    """A matrix that must be symmetric is not."""


class NotHurwitzError(StochaboundError, ValueError):
    """The drift matrix has an eigenvalue with nonnegative real part.

    The Lyapunov equation then has no unique SPD solution and the
    boundedness certificate does not apply (assumption 1.1 violated).
    """


class NumericalError(StochaboundError, ArithmeticError):
    """A linear solve was singular or a residual check failed."""


class BoundUndefinedError(StochaboundError, ArithmeticError):
    """The certificate condition fails, so the bound is infinite."""


class DegenerateQuadraticError(StochaboundError, ArithmeticError):
    """The bounding quadratic has a double root at zero (c == 0)."""


class DomainError(StochaboundError, ValueError):
    """Argument outside the domain where a formula is valid."""


class ResourceError(StochaboundError, RuntimeError):
    """A requested computation exceeds the configured size guard."""


class BlowUpError(StochaboundError, FloatingPointError):
    """A simulated path left the finite range.

    Attributes
    ----------
    path_index : int or None
        Index of the offending trajectory within the ensemble.
    step : int
        Euler-Maruyama step at which the threshold was crossed.
    """

    def __init__(self, message, step, path_index=None):
        super().__init__(message)
        self.step = step
        self.path_index = path_index
