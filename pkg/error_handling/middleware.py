"""
Error boundary for command-line entry points.

Catches exceptions raised by a subcommand, logs them with structured
context, writes a JSON error report to stderr and maps them to exit codes.
"""
import sys
import logging
from typing import Callable, Sequence, Optional, TextIO

logger = logging.getLogger("tek.error_handling")


def run_cli(
    func: Callable[[Sequence[str]], int],
    argv: Sequence[str],
    stderr: Optional[TextIO] = None,
) -> int:
    """
    Run ``func(argv)`` and translate exceptions into exit codes.

    Validation, lookup and state errors exit 1; invariant violations and
    unexpected exceptions exit 2.
    """
    # Import here to avoid circular dependency
    from error_handling import TEKError, ErrorResponse, log_error, EXIT_INTERNAL

    stderr = stderr or sys.stderr
    try:
        return func(argv)
    except Exception as exc:
        error = TEKError.from_exception(exc)
        log_error(
            error,
            logger,
            level=logging.ERROR if error.exit_code == EXIT_INTERNAL else logging.WARNING,
            extra={"argv": " ".join(argv)},
        )
        report = ErrorResponse(error=error.to_dict())
        print(report.model_dump_json(), file=stderr)
        return error.exit_code


__all__ = [
    'run_cli',
]
