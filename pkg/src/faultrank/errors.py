"""Shared exception types. CLI exit codes map onto these."""


class FaultrankError(Exception):
    """Base class for all toolkit errors."""


class ParseError(FaultrankError):
    """Malformed subject-program source."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class SuiteFormatError(FaultrankError):
    """Malformed test-suite file."""


class ConfigError(FaultrankError):
    """Invalid run configuration (bad flag, missing file, out-of-range value)."""


class DegenerateInputError(FaultrankError):
    """Input admits no localization (no failing tests, or no passing tests)."""


class UnusableTestError(FaultrankError):
    """A slicing criterion was never executed in the trace."""


class ConvergenceError(FaultrankError):
    """Solver hit its iteration budget before meeting its tolerance.

    Carries the last iterate and the KKT residual so callers can inspect
    how far off the solution was.
    """

    def __init__(self, message: str, beta, kkt_residual: float):
        super().__init__(message)
        self.beta = beta
        self.kkt_residual = kkt_residual
