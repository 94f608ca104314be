# ABOUTME: Exception hierarchy for mask construction, certificates and completion
# ABOUTME: Each class also inherits the builtin it refines so callers may catch either


class MatrixCompletionError(Exception):
    """Base class for every error raised by this package."""


class InputError(MatrixCompletionError, ValueError):
    """Malformed user-supplied data (files, matrices, edge lists)."""


class ShapeError(MatrixCompletionError, ValueError):
    """Operands whose dimensions do not agree."""


class ParameterError(MatrixCompletionError, ValueError):
    """A numeric or structural parameter outside its admissible range."""


class BiregularityError(InputError):
    """A sampling pattern whose row or column degrees are not uniform."""


class RankError(MatrixCompletionError, ValueError):
    """A requested rank exceeds the numerical rank of the matrix."""


class CertificateError(MatrixCompletionError, ValueError):
    """A certificate used outside its hypotheses."""


class ConstructionError(MatrixCompletionError, RuntimeError):
    """A graph construction produced an object violating its invariants."""


class NumericalFailureError(MatrixCompletionError, RuntimeError):
    """A numerical kernel failed to converge."""
