"""
Thread Monitor: periodic refresh of table records from scheduler and
stack-tuner state.
"""
import logging
from dataclasses import dataclass
from typing import Iterable, Protocol

from error_handling import ValidationError
from .table import ThreadInformationTable

logger = logging.getLogger("tek.monitor")

DEFAULT_MONITOR_PERIOD = 100


@dataclass(frozen=True)
class ThreadSample:
    tid: int
    policy: int
    priority: int
    zone: int
    stack_kib: int
    vm_kib: int
    peak_kib: int

    def fields(self) -> dict:
        """Record fields to refresh, without the key."""
        return {
            "policy": self.policy,
            "priority": self.priority,
            "zone": self.zone,
            "stack_kib": self.stack_kib,
            "vm_kib": self.vm_kib,
            "peak_kib": self.peak_kib,
        }


class SampleSource(Protocol):
    def live_samples(self) -> Iterable[ThreadSample]:
        ...


class ThreadMonitor:
    """Refreshes every live record once per ``period`` ticks."""

    def __init__(self, table: ThreadInformationTable, period: int = DEFAULT_MONITOR_PERIOD):
        if period <= 0:
            raise ValidationError("monitor period must be positive", details={"field": "monitor_period"})
        self.table = table
        self.period = period
        self.samples_taken = 0
        self.records_refreshed = 0

    def due(self, tick: int) -> bool:
        return tick % self.period == 0

    def monitor_sample(self, source: SampleSource) -> int:
        """
        Refresh each live thread's record. Frozen records are left alone.

        Returns:
            Number of records refreshed
        """
        refreshed = 0
        for sample in source.live_samples():
            if self.table.refresh(sample.tid, **sample.fields()):
                refreshed += 1
        self.samples_taken += 1
        self.records_refreshed += refreshed
        logger.debug("monitor sample", extra={"refreshed": refreshed})
        return refreshed
