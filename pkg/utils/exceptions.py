# utils/exceptions.py
"""
Custom exception hierarchy for the RIS simulator.

Every error raised by the domain modules derives from RisSimError and
carries the process exit code the command line reports for it.
"""

from typing import Optional, Any, Dict, Tuple
from dataclasses import dataclass


@dataclass
class ErrorContext:
    """
    Structured error context for debugging.

    Attributes:
        operation: What operation was being performed
        resource: What resource was being accessed
        details: Additional error details
    """

    operation: Optional[str] = None
    resource: Optional[str] = None
    details: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for logging."""
        return {
            k: v for k, v in {
                'operation': self.operation,
                'resource': self.resource,
                'details': self.details
            }.items() if v is not None
        }


class RisSimError(Exception):
    """
    Base exception for all simulator errors.

    Attributes:
        exit_code: Exit status the command line returns for this error
    """

    exit_code: int = 2

    def __init__(self, message: str, context: Optional[ErrorContext] = None):
        """
        Initialize base exception.

        Args:
            message: Error message
            context: Optional error context for debugging
        """
        self.context = context or ErrorContext()
        super().__init__(message)

    def __str__(self) -> str:
        """Format exception with context."""
        base_msg = super().__str__()
        if self.context.operation:
            return f"{base_msg} (during {self.context.operation})"
        return base_msg


# Configuration and validation exceptions

class ConfigurationError(RisSimError):
    """
    Raised when configuration is invalid or missing.

    Attributes:
        config_key: Specific configuration key that caused the error
    """

    def __init__(self, message: str, config_key: Optional[str] = None, **kwargs):
        if config_key:
            message = f"{message} (key: {config_key})"
        super().__init__(message, **kwargs)
        self.config_key = config_key


class ValidationError(RisSimError):
    """
    Raised when an input value violates a domain invariant.

    Attributes:
        field: Field that failed validation
        value: Value that was invalid
    """

    def __init__(self, message: str,
                 field: Optional[str] = None,
                 value: Optional[Any] = None, **kwargs):
        """
        Initialize validation error.

        Args:
            message: Error message
            field: Field that failed validation
            value: Invalid value
        """
        super().__init__(message, **kwargs)
        self.field = field
        self.value = value


class DimensionMismatchError(ValidationError):
    """Raised when a matrix shape does not match the array layout."""

    def __init__(self, message: str,
                 expected: Optional[Tuple[int, ...]] = None,
                 actual: Optional[Tuple[int, ...]] = None, **kwargs):
        if expected is not None and actual is not None:
            message = f"{message}: expected {expected[0]}x{expected[1]}, got {actual[0]}x{actual[1]}"
        super().__init__(message, **kwargs)
        self.expected = expected
        self.actual = actual


class OutOfBandError(ValidationError):
    """Raised when a frequency lies outside a model's validity band."""

    def __init__(self, message: str,
                 frequency: Optional[float] = None,
                 band: Optional[Tuple[float, float]] = None, **kwargs):
        if frequency is not None and band is not None:
            message = (f"{message}: {frequency / 1e9:.4f} GHz not in "
                       f"[{band[0] / 1e9:.4f}, {band[1] / 1e9:.4f}] GHz")
        super().__init__(message, field="frequency", value=frequency, **kwargs)
        self.frequency = frequency
        self.band = band


class MalformedFrameError(ValidationError):
    """
    Raised when a control frame is malformed.

    Attributes:
        line: 1-based line of the frame text (None for in-memory frames)
        column: 1-based column of the offending character
    """

    def __init__(self, message: str,
                 line: Optional[int] = None,
                 column: Optional[int] = None, **kwargs):
        if line is not None:
            position = f"line {line}" if column is None else f"line {line}, column {column}"
            message = f"{message} ({position})"
        super().__init__(message, **kwargs)
        self.line = line
        self.column = column


class NonUniformGridError(ValidationError):
    """Raised when the transform path is asked for a grid it cannot sample."""
    pass


class CalibrationError(ValidationError):
    """Raised when link-budget calibration input cannot be fitted."""
    pass


# File operation exceptions

class FileOperationError(RisSimError):
    """
    Raised when file operations fail.

    Attributes:
        file_path: Path to the file that caused the error
        operation: Type of operation (read, write, parse)
    """

    def __init__(self, message: str,
                 file_path: Optional[str] = None,
                 operation: Optional[str] = None, **kwargs):
        super().__init__(message, **kwargs)
        self.file_path = file_path
        self.operation = operation


# Numerical failures

class NumericalError(RisSimError):
    """Raised when a computation cannot produce a finite, meaningful result."""

    exit_code = 3


class MainLobeClippedError(NumericalError):
    """Raised when a -3 dB crossing of the main lobe is not inside the sampled cut."""

    def __init__(self, message: str, cut: Optional[str] = None, **kwargs):
        if cut:
            message = f"{message} (cut: {cut})"
        super().__init__(message, **kwargs)
        self.cut = cut


# Logger exceptions

class LoggerConfigurationError(ConfigurationError):
    """
    Raised when logger configuration is missing or invalid.

    This includes missing configuration files, invalid JSON,
    missing required sections, or incorrect structure.
    """

    def __init__(self, message: str,
                 config_file: Optional[str] = None,
                 **kwargs):
        if config_file:
            message = f"{message} (file: {config_file})"
        super().__init__(message, **kwargs)
        self.config_file = config_file


# Helpful error with instructions

class HelpfulError(RisSimError):
    """
    Exception that provides helpful instructions to fix the problem.

    Used for user-friendly error messages with solutions.
    """

    def __init__(self, what_went_wrong: str,
                 how_to_fix: str,
                 example: Optional[str] = None):
        """
        Initialize helpful error.

        Args:
            what_went_wrong: Description of the problem
            how_to_fix: Instructions to fix it
            example: Optional example of correct usage
        """
        message = f"\n❌ Problem: {what_went_wrong}\n\n✅ Solution: {how_to_fix}"
        if example:
            message += f"\n\n📝 Example:\n{example}"
        super().__init__(message)
        self.what_went_wrong = what_went_wrong
        self.how_to_fix = how_to_fix
        self.example = example
