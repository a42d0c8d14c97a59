"""
Utility functions for logging, error handling and tracing integration.
"""
import os
import sys
import logging
from typing import Optional
from pythonjsonlogger import jsonlogger

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s %(message)s"


class ErrorHandlingConfig:
    """Configuration for logging, error handling and tracing."""

    def __init__(
        self,
        service_name: str = "tek-bench",
        environment: Optional[str] = None,
        otlp_endpoint: Optional[str] = None,
        enable_tracing: bool = True,
        log_level: Optional[str] = None,
    ):
        self.service_name = service_name
        self.environment = environment or os.getenv("TEK_ENVIRONMENT", "development")
        self.otlp_endpoint = otlp_endpoint
        self.enable_tracing = enable_tracing
        self.log_level = (log_level or os.getenv("TEK_LOG_LEVEL", "WARNING")).upper()


def setup_logging(config: Optional[ErrorHandlingConfig] = None, stream=None) -> logging.Logger:
    """
    Install JSON-structured logging for the ``tek`` logger hierarchy.

    Args:
        config: Configuration for logging and tracing
        stream: Output stream (defaults to stderr)

    Returns:
        The root ``tek`` logger
    """
    config = config or ErrorHandlingConfig()

    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(jsonlogger.JsonFormatter(LOG_FORMAT))

    logger = logging.getLogger("tek")
    for existing in list(logger.handlers):
        logger.removeHandler(existing)
    logger.addHandler(handler)
    logger.setLevel(config.log_level)
    logger.propagate = False

    if config.enable_tracing:
        from .tracing import setup_tracing
        setup_tracing(
            service_name=config.service_name,
            environment=config.environment,
            otlp_endpoint=config.otlp_endpoint,
        )

    return logger


__all__ = [
    'ErrorHandlingConfig',
    'setup_logging',
]
