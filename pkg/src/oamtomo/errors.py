"""Exception types shared across the package."""


class OamTomoError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(OamTomoError, ValueError):
    """An argument violates a documented precondition."""


class GridMismatchError(OamTomoError):
    """Two fields that must share a grid do not."""


class InvalidBasisError(OamTomoError):
    """A basis passed to a decomposition is not orthonormal within tolerance."""


class InsufficientDataError(OamTomoError):
    """A scan or dataset is too small or one-sided to process."""


class DegenerateScanError(OamTomoError):
    """A transfer scan has no usable outer-weight maximum (e.g. charge 0)."""


class DegenerateGeneratorError(OamTomoError):
    """A basis generator is linearly dependent on the vectors built so far."""

    def __init__(self, generators):
        self.generators = list(generators)
        names = ", ".join(str(g) for g in self.generators)
        super().__init__(f"linearly dependent basis generators: {names}")


class InvalidStateError(OamTomoError):
    """A density matrix violates Hermiticity, positivity, or unit trace."""


class DegenerateMeasurementError(OamTomoError):
    """The measurement set assigns zero total probability to the state."""


class EmptySubspaceError(OamTomoError):
    """The inner block of a state carries (numerically) no probability."""


class UnderdeterminedFitError(OamTomoError):
    """Calibration curves do not cover all hologram/axis pairs."""


class InvalidDataError(OamTomoError):
    """Input data contain non-finite or otherwise unusable values."""


class ParseError(OamTomoError):
    """A data file failed to parse; carries the offending line number."""

    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
