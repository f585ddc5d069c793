"""Exception hierarchy for tiloops."""


class TIError(Exception):
    """Base class for every error raised by tiloops."""


class NonNormalizedState(TIError, ValueError):
    pass


class NotAnOffer(TIError, ValueError):
    pass


class OrphanConfirmation(TIError, ValueError):
    pass


class InvalidScenario(TIError, ValueError):
    pass


class UnknownOutcome(TIError, KeyError):
    pass


class ZeroMeasureSetting(TIError, ZeroDivisionError):
    pass


class MismatchedScenario(TIError, ValueError):
    pass


class InvariantViolation(TIError, AssertionError):
    """An internal invariant failed; carries the seed needed to reproduce it."""

    def __init__(self, message, seed=None):
        super().__init__(message)
        self.seed = seed


class ScenarioParseError(TIError, ValueError):
    """Malformed scenario text. ``line`` is 1-based; ``field`` names the key or section."""

    def __init__(self, message, line, field):
        super().__init__(f"line {line}: {field}: {message}")
        self.line = line
        self.field = field
