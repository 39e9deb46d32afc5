"""
Telemetry for estimation runs: stage spans, wall-clock timings and replication
counters through OpenTelemetry. Export to Application Insights is enabled only
when a connection string is configured; otherwise the no-op providers apply.
"""

import logging
import time
from contextlib import contextmanager
from typing import Any, Dict, Iterator, Optional

from opentelemetry import metrics, trace
from opentelemetry.trace import Status, StatusCode

logger = logging.getLogger(__name__)

_configured = False


def configure_telemetry(connection_string: Optional[str]) -> bool:
    """Enable Azure Monitor export once per process; returns whether it is active."""
    global _configured
    if _configured or not connection_string:
        return _configured
    try:
        from azure.monitor.opentelemetry import configure_azure_monitor

        configure_azure_monitor(connection_string=connection_string)
        _configured = True
        logger.info("Azure Monitor telemetry export enabled")
    except Exception as e:
        logger.warning(f"Azure Monitor initialization failed: {e}")
    return _configured


class MonitorService:
    """
    Stage-level tracing and timing.

    Every stage() block opens a span named tabcf.<stage>, records its wall time
    into `timings` (seconds, summed over repeated entries) and into the
    tabcf.stage.duration histogram.
    """

    def __init__(self, attributes: Optional[Dict[str, Any]] = None):
        self.attributes = attributes or {}
        self.timings: Dict[str, float] = {}
        self.tracer = trace.get_tracer("tabcf")
        self.meter = metrics.get_meter("tabcf")

        try:
            self.stage_histogram = self.meter.create_histogram(
                name="tabcf.stage.duration",
                description="Wall time per estimation stage",
                unit="s",
            )
            self.replication_counter = self.meter.create_counter(
                name="tabcf.replications",
                description="Replications finished, by outcome",
                unit="replications",
            )
        except Exception as e:
            logger.warning(f"Failed to initialize custom metrics: {e}")
            self.stage_histogram = None
            self.replication_counter = None

    @contextmanager
    def stage(self, name: str, **attributes: Any) -> Iterator[None]:
        merged = {**self.attributes, **attributes, "stage": name}
        started = time.perf_counter()
        with self.tracer.start_as_current_span(f"tabcf.{name}", attributes=merged) as span:
            try:
                yield
            except Exception as e:
                span.set_status(Status(StatusCode.ERROR, str(e)))
                raise
            finally:
                elapsed = time.perf_counter() - started
                self.timings[name] = self.timings.get(name, 0.0) + elapsed
                if self.stage_histogram is not None:
                    self.stage_histogram.record(elapsed, merged)
                logger.debug("[%s] %.3fs", name, elapsed)

    def log_replication(self, replication: int, seed: int, success: bool, error: Optional[str] = None):
        attributes = {**self.attributes, "replication": replication, "seed": seed, "success": str(success)}
        if self.replication_counter is not None:
            try:
                self.replication_counter.add(1, attributes)
            except Exception:
                pass
        if success:
            logger.info(
                f"Replication {replication} (seed {seed}) finished in {sum(self.timings.values()):.2f}s",
                extra={"custom_dimensions": attributes},
            )
        else:
            logger.error(
                f"Replication {replication} (seed {seed}) failed: {error}",
                extra={"custom_dimensions": {**attributes, "error": error}},
            )
