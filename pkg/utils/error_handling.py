"""
Exception hierarchy and CLI exit codes
"""

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID_CONFIG = 2
EXIT_ZERO_EVIDENCE = 3
EXIT_LIBRARY_ERROR = 4


class FrechetLabError(Exception):
    """Base class for all library errors"""
    exit_code = EXIT_LIBRARY_ERROR


class InvalidMeasureError(FrechetLabError, ValueError):
    """A measure, density or matrix violates one of its invariants"""


class InvalidParameterError(FrechetLabError, ValueError):
    """An argument is outside the range an operation accepts"""


class ZeroEvidenceError(FrechetLabError):
    """The Bayes normalizing integral vanishes: prior and data are incompatible"""
    exit_code = EXIT_ZERO_EVIDENCE


class SamplingError(FrechetLabError):
    """A sampler could not deliver draws within its contract"""


class SolverError(FrechetLabError):
    """The LP solver did not report an optimal solution"""


class ConfigError(FrechetLabError):
    """Invalid experiment configuration"""
    exit_code = EXIT_INVALID_CONFIG
