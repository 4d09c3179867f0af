"""Shared exception hierarchy.

The CLI maps ConfigError to exit code 2 and every other MatchDodgeError
to exit code 3.
"""


class MatchDodgeError(Exception):
    """Base class for all library errors."""


class ConfigError(MatchDodgeError):
    """Invalid configuration, flags, or set composition."""


class DimensionError(MatchDodgeError):
    """Vector dimensions do not agree."""


class NormalizationError(MatchDodgeError):
    """Vector cannot be normalized (zero or non-finite)."""


class CoverageError(MatchDodgeError):
    """Coverage is undefined (empty target set)."""


class FormatError(MatchDodgeError):
    """Malformed or unsupported file content."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix += str(path)
        if line is not None:
            prefix += f":{line}"
        if prefix:
            message = f"{prefix}: {message}"
        super().__init__(message)


class NumericError(MatchDodgeError):
    """Non-finite value encountered in a numeric computation."""


class OptimizerError(MatchDodgeError):
    """Optimizer aborted (non-finite objective or invalid setup)."""


class CropperDivergenceError(MatchDodgeError):
    """Repeated cropping never reached a fixed point."""


class CalibrationError(MatchDodgeError):
    """Threshold calibration is impossible (no mismatch pairs)."""


class ScenarioError(ConfigError):
    """Scenario inputs are inconsistent with the requested attack kind."""


class GenerationError(MatchDodgeError):
    """Synthetic dataset parameters are infeasible."""
