from __future__ import annotations

import contextlib
import json
import os
import sys
import threading
import time
from contextvars import ContextVar
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Dict, Iterable, Iterator, List, MutableMapping, Optional, Sequence

try:
    from opentelemetry import trace
    from opentelemetry.exporter.otlp.proto.grpc.trace_exporter import OTLPSpanExporter
    from opentelemetry.sdk.resources import Resource
    from opentelemetry.sdk.trace import TracerProvider
    from opentelemetry.sdk.trace.export import BatchSpanProcessor

    HAS_OTEL = True
except Exception:  # pragma: no cover - the otlp extra is optional
    HAS_OTEL = False

OP = "nchodge.op"
PARENT = "nchodge.parent"
ERROR = "nchodge.error"
SERVICE = "nchodge"
DEFAULT_OTLP_ENDPOINT = "http://localhost:4317"

Event = MutableMapping[str, Any]


class SpanRecorder:
    """Process-wide log of span ``start``/``end`` events.

    Operations in the library never export anything themselves; the CLI
    drains the recorder once per command through :func:`flush`.
    """

    def __init__(self) -> None:
        self.events: List[Event] = []
        self._lock = threading.Lock()

    def record(self, kind: str, attrs: Dict[str, Any]) -> Event:
        event: Event = {"ts": time.time(), "event": kind, "attrs": dict(attrs)}
        with self._lock:
            self.events.append(event)
        return event

    def snapshot(self) -> List[Event]:
        with self._lock:
            return list(self.events)

    def drain(self) -> List[Event]:
        with self._lock:
            events, self.events = self.events, []
        return events

    def clear(self) -> None:
        with self._lock:
            self.events.clear()


RECORDER = SpanRecorder()

_ACTIVE: ContextVar[Optional[str]] = ContextVar("nchodge_active_span", default=None)


def _namespaced(key: str) -> str:
    return key if "." in key else f"{SERVICE}.{key}"


@contextlib.contextmanager
def traced(operation: str, **attrs: Any) -> Iterator[Dict[str, Any]]:
    """Record one span around the body of a ``with`` block.

    Keyword names without a dot land under ``nchodge.``. The yielded dict is
    the attribute set of the closing event, so results can be attached to it.
    An exception leaves its class name in ``nchodge.error`` and propagates.
    """
    span_attrs: Dict[str, Any] = {OP: operation}
    span_attrs.update((_namespaced(k), v) for k, v in attrs.items())
    parent = _ACTIVE.get()
    if parent is not None:
        span_attrs[PARENT] = parent

    RECORDER.record("start", span_attrs)
    token = _ACTIVE.set(operation)
    try:
        yield span_attrs
    except Exception as exc:
        span_attrs[ERROR] = type(exc).__name__
        raise
    finally:
        _ACTIVE.reset(token)
        RECORDER.record("end", span_attrs)


class ExportResult(dict):
    """Status mapping returned by every exporter."""


class BaseExporter:
    kind = "base"

    def export(self, events: Sequence[Event]) -> ExportResult:
        raise NotImplementedError


class NDJSONExporter(BaseExporter):
    """One JSON object per event, appended to a file or written to a stream."""

    kind = "ndjson"

    def __init__(self, path: Optional[str] = None, stream: Optional[IO[str]] = None) -> None:
        self.path = Path(path).expanduser() if path else None
        self.stream = stream

    def _write(self, out: IO[str], events: Sequence[Event]) -> None:
        out.writelines(json.dumps(event, ensure_ascii=False, default=str) + "\n" for event in events)
        out.flush()

    def export(self, events: Sequence[Event]) -> ExportResult:
        if not events:
            return ExportResult(status="skipped", reason="no-events")
        if self.path is None:
            self._write(self.stream or sys.stderr, events)
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as handle:
                self._write(handle, events)
        return ExportResult(status="ok", exporter=self.kind, count=len(events))


@dataclass
class CoalescedSpan:
    name: str
    start_ts: float
    end_ts: float
    attrs: Dict[str, Any] = field(default_factory=dict)

    @property
    def duration(self) -> float:
        return self.end_ts - self.start_ts


def coalesce_spans(events: Sequence[Event]) -> List[CoalescedSpan]:
    """Pair start and end events into spans, innermost first.

    Spans nest, so an ``end`` always closes the most recent open ``start``.
    Starts that never end become zero-length spans.
    """
    open_spans: List[CoalescedSpan] = []
    closed: List[CoalescedSpan] = []
    for event in events:
        attrs = dict(event.get("attrs", {}))
        ts = float(event.get("ts", 0.0))
        name = str(attrs.get(OP, SERVICE))
        kind = event.get("event")
        if kind == "start":
            open_spans.append(CoalescedSpan(name, ts, ts))
        elif kind == "end" and open_spans:
            span = open_spans.pop()
            span.end_ts = ts
            span.attrs = attrs
            closed.append(span)
        else:
            closed.append(CoalescedSpan(name, ts, ts, attrs))
    closed.extend(reversed(open_spans))
    return closed


def _otel_value(value: Any) -> Any:
    return value if isinstance(value, (bool, int, float, str)) else str(value)


class OTelSDKTraceExporter(BaseExporter):
    """Replay recorded spans through the OpenTelemetry SDK over OTLP/gRPC."""

    kind = "otel-sdk"

    def __init__(self, endpoint: Optional[str] = None, insecure: Optional[bool] = None) -> None:
        if not HAS_OTEL:
            raise RuntimeError("install the 'otlp' extra to export spans over OTLP")
        self.endpoint = endpoint or os.getenv("OTEL_EXPORTER_OTLP_ENDPOINT") or DEFAULT_OTLP_ENDPOINT
        self.insecure = self.endpoint.startswith("http://") if insecure is None else insecure
        self._tracer = self._tracer_for(self.endpoint, self.insecure)

    @staticmethod
    def _tracer_for(endpoint: str, insecure: bool):
        provider = trace.get_tracer_provider()
        if not isinstance(provider, TracerProvider):
            provider = TracerProvider(resource=Resource.create({"service.name": SERVICE}))
            provider.add_span_processor(BatchSpanProcessor(OTLPSpanExporter(endpoint=endpoint, insecure=insecure)))
            trace.set_tracer_provider(provider)
        return trace.get_tracer(SERVICE)

    def export(self, events: Sequence[Event]) -> ExportResult:
        spans = coalesce_spans(events)
        for span in spans:
            otel_span = self._tracer.start_span(span.name, start_time=int(span.start_ts * 1e9))
            for key, value in span.attrs.items():
                otel_span.set_attribute(key, _otel_value(value))
            otel_span.end(end_time=int(span.end_ts * 1e9))
        return ExportResult(status="ok", exporter=self.kind, count=len(spans), endpoint=self.endpoint)


class _UnavailableExporter(BaseExporter):
    kind = "otel-sdk"

    def export(self, events: Sequence[Event]) -> ExportResult:
        return ExportResult(status="skipped", exporter=self.kind, reason="otlp extra not installed")


def _flag(name: str) -> bool:
    return os.getenv(name, "0") == "1"


def tracing_enabled() -> bool:
    return _flag("NCHODGE_TRACE") or _flag("NCHODGE_EXPORT_OTLP")


def configure_exporters(stream: Optional[IO[str]] = None) -> List[BaseExporter]:
    """Build the exporters selected by ``NCHODGE_TRACE`` and ``NCHODGE_EXPORT_OTLP``."""
    exporters: List[BaseExporter] = []
    if _flag("NCHODGE_TRACE"):
        exporters.append(NDJSONExporter(path=os.getenv("NCHODGE_TRACE_PATH"), stream=stream))
    if _flag("NCHODGE_EXPORT_OTLP"):
        exporters.append(OTelSDKTraceExporter() if HAS_OTEL else _UnavailableExporter())
    return exporters


def export_events(events: Sequence[Event], exporters: Iterable[BaseExporter]) -> List[ExportResult]:
    return [exporter.export(events) for exporter in exporters]


def flush(stream: Optional[IO[str]] = None) -> List[ExportResult]:
    """Drain the recorder into the configured exporters; a no-op when tracing is off."""
    if not tracing_enabled():
        return []
    return export_events(RECORDER.drain(), configure_exporters(stream=stream))
