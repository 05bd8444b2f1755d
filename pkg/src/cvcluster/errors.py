"""Exception hierarchy. The CLI maps these onto exit codes."""


class CvClusterError(Exception):
    """Base class for all package errors."""


class ValidationError(CvClusterError, ValueError):
    """Malformed input: bad graph, bad mode index, bad parameter."""


class NumericalError(CvClusterError, ArithmeticError):
    """A numerical tolerance check failed."""


class TruncationError(NumericalError):
    """Fock-space truncation leaked more norm than allowed."""


class FrameError(ValidationError):
    """A gate cannot be realised in the current byproduct frame."""


class OrderingError(ValidationError):
    """An adaptive operation was scheduled before the result it depends on."""
