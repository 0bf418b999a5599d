"""Exception types shared across the package."""


class ChargeSimError(Exception):
    """Base class for all chargesim errors."""


class OverlapAmbiguity(ChargeSimError):
    """Eigenvector-to-charge-state assignment is ambiguous.

    Raised when a thermal state is requested too close to a balance point,
    where charge-basis labels stop being meaningful.
    """


class OutOfRange(ChargeSimError):
    """A time or index lies outside the valid domain."""


class InvalidLabel(ChargeSimError):
    """Unknown computational-basis input label (expected 00, 01, 10 or 11)."""


class StepTooLarge(ChargeSimError):
    """Integration step too coarse for the fastest energy scale present."""


class StateInvalid(ChargeSimError):
    """Matrix handed to the integrator is not a valid density matrix."""


class FitDiverged(ChargeSimError):
    """Damped least-squares loop could not reduce the residual."""


class InsufficientData(ChargeSimError):
    """Too few samples (or too short a span) to constrain the fit."""


class ParseError(ChargeSimError):
    """Config text could not be parsed; carries the offending line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class ValidationError(ChargeSimError):
    """Config parsed but a key or value is not acceptable."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
        self.message = message
