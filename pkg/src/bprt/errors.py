"""Exception types shared across the package."""


class BprtError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(BprtError, ValueError):
    """An argument violates a documented precondition (non-finite, empty, negative...)."""


class DimensionError(BprtError, ValueError):
    """Frame/grid dimensions do not satisfy a tiling or matching requirement."""


class SingularThresholdError(BprtError, ValueError):
    """A logistic weight assignment was requested with a zero decision threshold."""


class ConductanceRangeError(BprtError, ValueError):
    """A programming target lies outside [1/r_off, 1/r_on]."""


class NonConvergenceError(BprtError, RuntimeError):
    """Pulse programming exhausted its pulse budget before reaching tolerance.

    Carries the final device state and the number of pulses applied so callers
    can inspect how far programming got.
    """

    def __init__(self, message, state, pulses_applied):
        super().__init__(message)
        self.state = state
        self.pulses_applied = pulses_applied


class UndefinedRateError(BprtError, ZeroDivisionError):
    """A confusion-matrix rate is undefined because a class is absent.

    The message names the missing class or ratio.
    """


class ParseError(BprtError, ValueError):
    """Malformed NetPBM input. Carries the byte offset where parsing failed."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ModelFormatError(BprtError, ValueError):
    """Model file is unreadable: bad version, checksum, or inconsistent dimensions."""
