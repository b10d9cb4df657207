"""Exception hierarchy shared by every module."""


class FractalDrumError(Exception):
    """Base class for all package errors."""


class ArgumentError(FractalDrumError, ValueError):
    """Invalid argument value or shape."""


class UnsupportedIFSError(FractalDrumError):
    """The IFS cannot be handled by the requested operation (e.g. not grid aligned)."""


class ResolutionError(FractalDrumError):
    """A grid is too coarse to resolve the requested geometry."""


class DomainError(FractalDrumError):
    """A point lies outside the domain an evaluator is defined on."""


class ConventionError(FractalDrumError):
    """Eigenvalues violate the non-positive Laplacian convention."""


class IllConditionedSpectrumError(FractalDrumError):
    """Spectral magnitudes too small for a well defined log ratio."""


class NumericalError(FractalDrumError):
    """Base for failures of a numerical method rather than of the input."""


class ConvergenceError(NumericalError):
    """An iterative eigensolver did not converge within its budget."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class PoleError(NumericalError):
    """Spectral parameter too close to an eigenvalue."""

    def __init__(self, message, eigenvalue):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class ParseError(FractalDrumError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)
        self.line = line
        self.path = path
