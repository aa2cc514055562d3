"""Exception taxonomy used across the package."""


class UltrasemError(Exception):
    """Base class for all package errors."""


class GeometryError(UltrasemError):
    """Degenerate, nonconvex or otherwise unusable geometry."""


class MeshError(UltrasemError):
    """Mesh construction failure; the message names the offending entity."""


class MeshFormatError(MeshError):
    """Mesh file could not be parsed.  ``line`` is the 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class BookkeepingError(UltrasemError):
    """Inconsistent element/edge/interface bookkeeping."""


class LinearAlgebraError(UltrasemError):
    """Factorization or solve failure."""


class SingularOperatorError(LinearAlgebraError):
    """A factorization hit an exactly or numerically singular matrix."""


class InstabilityError(UltrasemError):
    """A time integration produced non-finite values."""

    def __init__(self, message, step=None, cfl=None):
        self.step = step
        self.cfl = cfl
        super().__init__(message)


class ExpressionError(UltrasemError):
    """A user-supplied expression could not be parsed or evaluated."""
