"""OpenTelemetry integration for qqlab.

Provides tracing for CLI commands and Monte Carlo batches. Spans are exported
to stderr when QQLAB_TRACE=console; otherwise the no-op provider stays active.

Usage:
    from src.telemetry import setup_telemetry, get_tracer
    setup_telemetry()               # call ONCE at process start
    tracer = get_tracer()
    with tracer.start_as_current_span("badprob") as span:
        span.set_attribute("qqlab.n", n)
"""

import logging
import sys

from opentelemetry import trace
from opentelemetry.trace import Tracer

from src import __version__
from src.config import OTEL_SERVICE_NAME, QQLAB_TRACE

logger = logging.getLogger(__name__)

# Module-level tracer (lazy-initialized)
_tracer: Tracer | None = None

SERVICE_VERSION = __version__

# Whether telemetry has been initialized
_initialized = False


def setup_telemetry(mode: str | None = None) -> None:
    """Configure the OpenTelemetry tracer provider.

    Idempotent; later calls are no-ops.

    Args:
        mode: Export mode override; defaults to QQLAB_TRACE. Only "console" exports.
    """
    global _initialized
    if _initialized:
        return

    mode = (mode if mode is not None else QQLAB_TRACE).lower()
    if mode != "console":
        logger.debug("QQLAB_TRACE not set to 'console', spans are not exported")
        _initialized = True
        return

    try:
        from opentelemetry.sdk.resources import Resource
        from opentelemetry.sdk.trace import TracerProvider
        from opentelemetry.sdk.trace.export import ConsoleSpanExporter, SimpleSpanProcessor

        resource = Resource.create(
            {
                "service.name": OTEL_SERVICE_NAME,
                "service.version": SERVICE_VERSION,
            }
        )
        provider = TracerProvider(resource=resource)
        provider.add_span_processor(SimpleSpanProcessor(ConsoleSpanExporter(out=sys.stderr)))
        trace.set_tracer_provider(provider)

        _initialized = True
        logger.info("OpenTelemetry configured → console (service=%s)", OTEL_SERVICE_NAME)

    except ImportError:
        logger.warning("opentelemetry-sdk not installed, spans will not be exported")
        _initialized = True


def get_tracer(name: str = "qqlab") -> Tracer:
    """Get an OpenTelemetry tracer instance.

    Args:
        name: Tracer name (used as the instrumentation scope).

    Returns:
        OpenTelemetry Tracer.
    """
    global _tracer
    if _tracer is None:
        _tracer = trace.get_tracer(name, SERVICE_VERSION)
    return _tracer
