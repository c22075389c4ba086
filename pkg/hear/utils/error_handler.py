"""
Centralized error handling and logging utilities.

This module provides:
- Custom exception classes, each with a machine-readable name
- Centralized error logging with context
- A decorator for consistent error handling in CLI commands
"""
import logging
import sys
from functools import wraps
from typing import Any, Callable

import click

logger = logging.getLogger(__name__)


class HearError(Exception):
    """Base class for every error raised by the toolkit."""

    @property
    def name(self) -> str:
        return type(self).__name__


class ValidationError(HearError):
    """Custom exception for invariant and precondition violations."""
    pass


class FormatError(HearError):
    """Custom exception for malformed files and streams."""
    pass


class NotFoundError(HearError):
    """Custom exception for missing input files."""
    pass


# montage
class MontageParseError(ValidationError):
    pass


class DuplicateLabel(ValidationError):
    pass


class NonFiniteCoordinate(ValidationError):
    pass


class CoincidentElectrodes(ValidationError):
    pass


class TooFewChannels(ValidationError):
    pass


class NeighborCountOutOfRange(ValidationError):
    pass


# signals and models
class DimensionMismatch(ValidationError):
    pass


class NonFiniteInput(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass


class InvalidSmoothingSpec(ValidationError):
    pass


class TrialTooShort(ValidationError):
    pass


class DeadChannel(ValidationError):
    pass


class UncalibratedState(ValidationError):
    pass


class FingerprintMismatch(ValidationError):
    pass


class SamplingRateMismatch(ValidationError):
    pass


class InvalidModel(ValidationError):
    pass


class AllTrialsRejected(ValidationError):
    pass


# simulation
class InvalidBand(ValidationError):
    pass


class OnsetOutsideTrial(ValidationError):
    pass


# evaluation
class EmptyMask(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class WindowTooLong(ValidationError):
    pass


class InvalidCriteria(ValidationError):
    pass


# files and streams
class VersionMismatch(FormatError):
    pass


class TruncatedPayload(FormatError):
    pass


class Inconsistency(FormatError):
    pass


class FingerprintAbsent(FormatError):
    pass


class MalformedFrame(FormatError):
    pass


def log_error(error: Exception, context: str = "", level: str = "error") -> None:
    """
    Centralized error logging with context.

    Args:
        error: The exception that occurred
        context: Additional context about where/why the error occurred
        level: Logging level ('error', 'warning', 'info', 'debug')
    """
    log_method = getattr(logger, level, logger.error)
    log_method(
        f"{context}: {type(error).__name__}: {str(error)}",
        exc_info=level == "error",
        extra={'context': context, 'error_type': type(error).__name__}
    )


def handle_cli_errors(f: Callable) -> Callable:
    """
    Decorator to handle command errors consistently.

    Toolkit errors become a one-line diagnostic on stderr
    (``error: <Name>: <message>``) and exit status 2; anything else is logged
    with its traceback and exits with status 1.
    """
    @wraps(f)
    def decorated_function(*args: Any, **kwargs: Any) -> Any:
        try:
            return f(*args, **kwargs)
        except HearError as e:
            log_error(e, f"{f.__name__} failed", level="warning")
            click.echo(f"error: {e.name}: {e}", err=True)
            sys.exit(2)
        except click.exceptions.Exit:
            raise
        except Exception as e:
            log_error(e, f"Unexpected error in {f.__name__}")
            click.echo(f"error: InternalError: {e}", err=True)
            sys.exit(1)
    return decorated_function
