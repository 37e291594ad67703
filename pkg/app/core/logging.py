"""Process-wide logger and tracer for genf-engine.

Console logs go to stderr since stdout carries CLI records. With
ENABLE_OTEL_TRACING=true, spans and log records are batched to the OTLP
collector instead; call `flush_telemetry` before the process exits.
"""

from __future__ import annotations

import json
import logging
import sys
from typing import Any, Optional

from opentelemetry import trace
from opentelemetry._logs import set_logger_provider
from opentelemetry.exporter.otlp.proto.grpc._log_exporter import OTLPLogExporter
from opentelemetry.exporter.otlp.proto.grpc.trace_exporter import OTLPSpanExporter
from opentelemetry.sdk._logs import LoggerProvider, LoggingHandler
from opentelemetry.sdk._logs.export import BatchLogRecordProcessor
from opentelemetry.sdk.resources import Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import BatchSpanProcessor

from .config import settings

SERVICE_NAME = "genf-engine"

# attributes every LogRecord carries; anything else came in through `extra=`
_RECORD_FIELDS = frozenset(vars(logging.LogRecord("", 0, "", 0, "", None, None))) | {
    "message",
    "asctime",
}


class JsonLogFormatter(logging.Formatter):
    """One JSON object per record, `extra=` fields as top-level keys."""

    def format(self, record: logging.LogRecord) -> str:
        payload: dict[str, Any] = {
            "timestamp": self.formatTime(record, self.datefmt),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        for key, value in vars(record).items():
            if key not in _RECORD_FIELDS and key not in payload:
                payload[key] = value
        if record.exc_info:
            payload["exception"] = self.formatException(record.exc_info)
        return json.dumps(payload, default=str)


def build_formatter(log_format: str) -> logging.Formatter:
    if log_format.lower() == "json":
        return JsonLogFormatter()
    return logging.Formatter(log_format)


def otel_enabled() -> bool:
    return settings.ENABLE_OTEL_TRACING.lower() == "true"


def _otlp_headers() -> dict[str, str]:
    if not settings.OTEL_INGESTION_KEY:
        return {}
    return {"otel-ingestion-key": settings.OTEL_INGESTION_KEY}


def _resource() -> Resource:
    return Resource.create(
        {
            "service.name": settings.OTEL_SERVICE_NAME,
            "deployment.environment": settings.OTEL_SERVICE_ENVIRONMENT,
        }
    )


def _otlp_providers(resource: Resource) -> tuple[TracerProvider, LoggerProvider]:
    tracer_provider = TracerProvider(resource=resource)
    tracer_provider.add_span_processor(
        BatchSpanProcessor(
            OTLPSpanExporter(
                insecure=True,
                endpoint=settings.OTEL_EXPORTER_OTLP_ENDPOINT,
                headers=_otlp_headers(),
            )
        )
    )
    logger_provider = LoggerProvider(resource=resource)
    logger_provider.add_log_record_processor(
        BatchLogRecordProcessor(
            OTLPLogExporter(
                insecure=True,
                endpoint=settings.OTEL_EXPORTER_OTLP_ENDPOINT,
                headers=_otlp_headers(),
            )
        )
    )
    return tracer_provider, logger_provider


def _console_handler(level: int) -> logging.Handler:
    handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(level)
    handler.setFormatter(build_formatter(settings.LOG_FORMAT))
    return handler


def configure_telemetry() -> tuple[logging.Logger, TracerProvider, Optional[LoggerProvider]]:
    """Attach handlers to the service logger and install the global tracer provider."""
    level = getattr(logging, settings.LOG_LEVEL.upper())
    log = logging.getLogger(SERVICE_NAME)
    log.setLevel(level)
    log.propagate = False

    if otel_enabled():
        tracer_provider, logger_provider = _otlp_providers(_resource())
        set_logger_provider(logger_provider)
        log.addHandler(LoggingHandler(level=logging.NOTSET, logger_provider=logger_provider))
    else:
        # exporter-less provider: spans are recorded and dropped
        tracer_provider, logger_provider = TracerProvider(), None
        log.addHandler(_console_handler(level))
    trace.set_tracer_provider(tracer_provider)

    logging.getLogger("opentelemetry").setLevel(logging.WARNING)
    return log, tracer_provider, logger_provider


def flush_telemetry(*, shutdown: bool = False, timeout_millis: int = 5_000) -> None:
    """Push out batched spans and log records; `shutdown` also stops the exporters."""
    for provider in (_tracer_provider, _logger_provider):
        if provider is None:
            continue
        provider.force_flush(timeout_millis)
        if shutdown:
            provider.shutdown()


logger, _tracer_provider, _logger_provider = configure_telemetry()
tracer = trace.get_tracer(SERVICE_NAME)
