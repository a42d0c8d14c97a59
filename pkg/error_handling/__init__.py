"""
Error handling module for the TEK simulator.

This module provides a structured way to raise, log and report errors across
the scheduler, stack tuner, thread registry, simulation kernel and bench CLI.
"""
from enum import Enum
from typing import Optional, Dict, Any, List, Union
import logging
from pydantic import BaseModel

# Import all from submodules to make them available at the package level
from .tracing import *
from .middleware import *
from .utils import *

# Re-export all error-related classes and functions
__all__ = [
    # Error codes and base classes
    'ErrorCode',
    'ErrorResponse',
    'TEKError',

    # Common error types
    'ValidationError',
    'NotFoundError',
    'AlreadyExistsError',
    'InvalidStateError',
    'InvariantViolation',

    # Exit codes
    'EXIT_OK',
    'EXIT_VALIDATION',
    'EXIT_INTERNAL',

    # Utility functions
    'log_error',
    'run_cli',

    # Tracing
    'setup_tracing',
    'get_tracer',
    'trace_span',

    # Utils
    'ErrorHandlingConfig',
    'setup_logging',
]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INTERNAL = 2


class ErrorCode(str, Enum):
    """Standard error codes for the simulator."""
    # Input errors
    VALIDATION_ERROR = "validation_error"
    NOT_FOUND = "not_found"
    ALREADY_EXISTS = "already_exists"
    INVALID_STATE = "invalid_state"

    # Internal errors
    INVARIANT_VIOLATION = "invariant_violation"

    # Unknown Error
    UNKNOWN_ERROR = "unknown_error"


class ErrorResponse(BaseModel):
    """Machine-readable error report written to stderr by the CLI."""
    error: Dict[str, Any]

    model_config = {
        "json_schema_extra": {
            "example": {
                "error": {
                    "code": "validation_error",
                    "message": "Invalid scenario",
                    "details": {"errors": [{"field": "thread.count", "line": 12,
                                            "message": "must be >= 0"}]},
                    "exit_code": 1,
                }
            }
        }
    }


class TEKError(Exception):
    """Base exception class for all TEK simulator errors."""

    def __init__(
        self,
        code: Union[ErrorCode, str],
        message: str,
        exit_code: int = EXIT_VALIDATION,
        details: Optional[Dict[str, Any]] = None,
        cause: Optional[Exception] = None,
    ):
        self.code = ErrorCode(code) if isinstance(code, str) else code
        self.message = message
        self.exit_code = exit_code
        self.details = details or {}
        self.cause = cause
        super().__init__(message)

    def to_dict(self) -> Dict[str, Any]:
        """Convert the error to a dictionary for JSON serialization."""
        return {
            "code": self.code.value,
            "message": self.message,
            "details": self.details,
            "exit_code": self.exit_code,
        }

    @classmethod
    def from_exception(cls, exc: Exception) -> 'TEKError':
        """Create a TEKError from a generic exception."""
        if isinstance(exc, TEKError):
            return exc
        return cls(
            code=ErrorCode.UNKNOWN_ERROR,
            message=str(exc) or "An unknown error occurred",
            exit_code=EXIT_INTERNAL,
            details={"exception_type": exc.__class__.__name__},
            cause=exc,
        )


# Common error types for easy reuse
class ValidationError(TEKError):
    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            code=ErrorCode.VALIDATION_ERROR,
            message=message,
            exit_code=EXIT_VALIDATION,
            details=details,
        )

    @property
    def field_errors(self) -> List[Dict[str, Any]]:
        return list(self.details.get("errors", []))


class NotFoundError(TEKError):
    def __init__(self, resource: str, id: Any, message: Optional[str] = None):
        super().__init__(
            code=ErrorCode.NOT_FOUND,
            message=message or f"no such {resource}",
            exit_code=EXIT_VALIDATION,
            details={"resource": resource, "id": id},
        )


class AlreadyExistsError(TEKError):
    def __init__(self, resource: str, id: Any, message: str):
        super().__init__(
            code=ErrorCode.ALREADY_EXISTS,
            message=message,
            exit_code=EXIT_VALIDATION,
            details={"resource": resource, "id": id},
        )


class InvalidStateError(TEKError):
    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            code=ErrorCode.INVALID_STATE,
            message=message,
            exit_code=EXIT_VALIDATION,
            details=details,
        )


class InvariantViolation(TEKError):
    def __init__(self, invariant: str, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            code=ErrorCode.INVARIANT_VIOLATION,
            message=message,
            exit_code=EXIT_INTERNAL,
            details={"invariant": invariant, **(details or {})},
        )


def log_error(
    error: Exception,
    logger: logging.Logger,
    level: int = logging.ERROR,
    extra: Optional[Dict[str, Any]] = None
) -> None:
    """
    Helper function to log errors with structured context.

    Args:
        error: The exception to log
        logger: Logger instance to use
        level: Log level (default: ERROR)
        extra: Additional context to include in the log
    """
    extra = dict(extra or {})

    if isinstance(error, TEKError):
        extra.update({
            "error_code": error.code.value,
            "exit_code": error.exit_code,
        })
        # "message" and friends are reserved LogRecord attributes
        for key, value in error.details.items():
            extra.setdefault(f"detail_{key}", value)
        if error.cause:
            extra["cause"] = str(error.cause)
    else:
        extra.update({
            "error_type": error.__class__.__name__,
            "error_message": str(error)
        })

    logger.log(level, str(error), extra=extra, exc_info=level >= logging.ERROR)
