"""Exception types raised across the package."""


class LiegeoError(Exception):
    pass


class DimensionMismatch(LiegeoError, ValueError):
    pass


class FiltrationError(LiegeoError, ValueError):
    """Invalid chain of subalgebras; ``level`` names the offending index."""

    def __init__(self, message, level=None):
        super().__init__(message)
        self.level = level


class NotNestedError(FiltrationError):
    pass


class NotSubalgebraError(FiltrationError):
    pass


class NotStrictError(FiltrationError):
    pass


class LinearDependenceError(FiltrationError):
    pass


class InvalidStructure(LiegeoError, ValueError):
    pass


class InvalidParameters(LiegeoError, ValueError):
    pass


class InvalidMomentum(LiegeoError, ValueError):
    pass


class UnknownName(LiegeoError, KeyError):
    pass


class IntegrationDiverged(LiegeoError, RuntimeError):
    def __init__(self, message, last_time):
        super().__init__(message)
        self.last_time = last_time


class NumericalRankAmbiguous(LiegeoError, RuntimeError):
    def __init__(self, message, gap):
        super().__init__(message)
        self.gap = gap


class ConfigError(LiegeoError, ValueError):
    pass
