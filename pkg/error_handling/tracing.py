"""
OpenTelemetry configuration and utilities for tracing simulation runs.
"""
import os
import sys
import inspect
from functools import wraps
from typing import Optional, Dict, Any
from opentelemetry import trace
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import BatchSpanProcessor, ConsoleSpanExporter
from opentelemetry.exporter.otlp.proto.grpc.trace_exporter import OTLPSpanExporter
from opentelemetry.sdk.resources import Resource, SERVICE_NAME, DEPLOYMENT_ENVIRONMENT
from opentelemetry.trace.status import Status, StatusCode


def setup_tracing(
    service_name: str = "tek-bench",
    environment: str = "development",
    otlp_endpoint: Optional[str] = None,
    service_version: str = "1.0.0",
    console: bool = False,
) -> Optional[trace.Tracer]:
    """
    Configure OpenTelemetry tracing for the simulator.

    Nothing is exported unless an OTLP endpoint is configured or console
    export is requested; console spans go to stderr so CSV on stdout stays
    machine-readable.

    Args:
        service_name: Name of the service for tracing
        environment: Deployment environment (e.g., 'development', 'ci')
        otlp_endpoint: OTLP endpoint URL (e.g., 'http://localhost:4317')
        service_version: Version of the simulator
        console: Export spans to stderr
    """
    # Use environment variables if not provided
    otlp_endpoint = otlp_endpoint or os.getenv("OTEL_EXPORTER_OTLP_ENDPOINT")
    console = console or os.getenv("TEK_TRACE_CONSOLE") == "1"

    is_test = 'pytest' in sys.modules
    if is_test or not (otlp_endpoint or console):
        return None

    resource = Resource.create({
        SERVICE_NAME: service_name,
        DEPLOYMENT_ENVIRONMENT: environment,
        "service.version": service_version,
    })
    provider = TracerProvider(resource=resource)

    if console:
        provider.add_span_processor(
            BatchSpanProcessor(ConsoleSpanExporter(out=sys.stderr))
        )

    if otlp_endpoint:
        provider.add_span_processor(
            BatchSpanProcessor(OTLPSpanExporter(endpoint=otlp_endpoint))
        )

    # Set the global tracer provider
    trace.set_tracer_provider(provider)

    return trace.get_tracer(service_name, service_version)


def get_tracer(name: str = None) -> trace.Tracer:
    """Get a tracer instance."""
    return trace.get_tracer(name or __name__)


def trace_span(
    name: str,
    attributes: Optional[Dict[str, Any]] = None,
    kind: trace.SpanKind = trace.SpanKind.INTERNAL,
    record_exception: bool = True,
):
    """Decorator for wrapping a synchronous function in a named span."""
    def decorator(func):
        if inspect.iscoroutinefunction(func):
            raise TypeError("trace_span supports synchronous functions only")

        @wraps(func)
        def wrapper(*args, **kwargs):
            tracer = get_tracer(func.__module__)
            with tracer.start_as_current_span(
                name,
                kind=kind,
                attributes=attributes,
            ) as span:
                try:
                    return func(*args, **kwargs)
                except Exception as e:
                    if record_exception:
                        span.record_exception(e)
                        span.set_status(Status(StatusCode.ERROR, str(e)))
                    raise

        return wrapper

    return decorator


__all__ = [
    'setup_tracing',
    'get_tracer',
    'trace_span',
]
