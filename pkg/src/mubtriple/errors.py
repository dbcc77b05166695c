"""Exception hierarchy shared by every module."""


class MubError(Exception):
    """Base class for all package errors."""


class InvalidInputError(MubError, ValueError):
    """Raised when an argument violates a documented precondition."""


class DegenerateAxesError(InvalidInputError):
    """Two quadrature axes are parallel or antiparallel.

    The overlap of their eigenstates is a delta function, which has no
    finite value to return.
    """


class GridFormatError(InvalidInputError):
    """A grid or wavefunction file could not be parsed.

    Attributes
    ----------
    line : int or None
        1-based line number of the offending line, when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class FitError(MubError, RuntimeError):
    """A least-squares fit did not converge.

    Attributes
    ----------
    last_params : numpy.ndarray or None
        The final iterate (amplitude, mean, sigma, background).
    """

    def __init__(self, message, last_params=None):
        super().__init__(message)
        self.last_params = last_params
