"""Statement-level fault localization for a small imperative language."""

from .config import RunConfig, component_seed, load_config
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateInputError,
    FaultrankError,
    ParseError,
    SuiteFormatError,
    UnusableTestError,
)
from .pipeline import LocalizeResult, localize, localize_spectrum

__version__ = "0.1.0"

__all__ = [
    "RunConfig",
    "component_seed",
    "load_config",
    "FaultrankError",
    "ParseError",
    "SuiteFormatError",
    "ConfigError",
    "DegenerateInputError",
    "UnusableTestError",
    "ConvergenceError",
    "LocalizeResult",
    "localize",
    "localize_spectrum",
    "__version__",
]
