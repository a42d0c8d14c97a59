"""
Run metrics.

Exact values (Fractions) are kept in the report; ``fixed`` renders them as
fixed-point decimal strings for CSV so exports are identical on every
platform.
"""
import math
import statistics
from fractions import Fraction
from typing import TYPE_CHECKING, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from scheduler.models import Criticality
from thread_registry.record import ThreadInfoRecord

if TYPE_CHECKING:
    from .kernel import Simulation

CRITICALITY_LABELS = {
    Criticality.UNSET: "unset",
    Criticality.TIME_CRITICAL: "tc",
    Criticality.NON_TIME_CRITICAL: "ntc",
}


def fixed(value, places: int = 6) -> str:
    """Render a number as a fixed-point string, rounding half to even."""
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        value = Fraction(value)
    scaled = round(Fraction(value) * 10 ** places)
    sign = "-" if scaled < 0 else ""
    whole, frac = divmod(abs(scaled), 10 ** places)
    if places == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:0{places}d}"


class ThreadMetrics(BaseModel):
    tid: int
    ordinal: int
    role: str
    group: str
    criticality: str
    policy: str
    nice: int
    failed: bool = False
    arrival_tick: int
    exit_tick: Optional[int] = None
    cpu_ticks: int = 0
    context_switches: int = 0
    preemptions: int = 0
    response_times: List[int] = Field(default_factory=list)
    lazy_wait_max: int = 0
    stack_reserved_kib: int = 0
    stack_peak_kib: int = 0
    zone: str = "unknown"

    @property
    def mean_response(self) -> Optional[Fraction]:
        if not self.response_times:
            return None
        return Fraction(sum(self.response_times), len(self.response_times))


class FaultRecord(BaseModel):
    tick: int
    tid: int
    kind: str
    request_kib: Optional[int] = None
    used_kib: Optional[int] = None


class MigrationRecord(BaseModel):
    tick: int
    tid: int
    source: str
    target: str


class SpaceSummary(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    allocated_kib: int = 0
    guard_kib: int = 0
    committed_kib: int = 0
    actual_peak_kib: int = 0
    overhead_ratio: Fraction = Fraction(0)
    overhead_above_actual: Fraction = Fraction(0)


class MetricsReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    scenario: str
    mode: str
    seed: int
    elapsed_ticks: int = 0
    idle_ticks: int = 0
    context_switches: int = 0
    threads: List[ThreadMetrics] = Field(default_factory=list)
    group_cpu_ticks: Dict[str, int] = Field(default_factory=dict)
    faults: List[FaultRecord] = Field(default_factory=list)
    first_exhaustion_ordinal: Optional[int] = None
    failed_creations: int = 0
    space: SpaceSummary = Field(default_factory=SpaceSummary)
    events_total: int = 0
    events_completed: int = 0
    events_undeliverable: int = 0
    mediator_link_ops: int = 0
    migrations: List[MigrationRecord] = Field(default_factory=list)
    strict_delay_violations: int = 0
    schedule_trace: Optional[List[Tuple[int, Optional[int], str]]] = None
    table_records: List[ThreadInfoRecord] = Field(default_factory=list)

    # -- selections ---------------------------------------------------------------

    def by_criticality(self, label: str) -> List[ThreadMetrics]:
        return [t for t in self.threads if t.criticality == label]

    def response_times(self, label: str = "tc") -> List[int]:
        return [r for t in self.by_criticality(label) for r in t.response_times]

    def mean_response(self, label: str = "tc") -> Optional[Fraction]:
        samples = self.response_times(label)
        if not samples:
            return None
        return Fraction(sum(samples), len(samples))

    def response_cv(self, label: str = "tc") -> Optional[float]:
        """Population coefficient of variation; 0 for constant samples."""
        samples = self.response_times(label)
        if not samples:
            return None
        mean = statistics.mean(samples)
        if mean == 0:
            return 0.0
        return statistics.pstdev(samples) / float(mean)

    def max_response(self, label: str = "ntc") -> Optional[int]:
        samples = self.response_times(label)
        return max(samples) if samples else None

    def preemptions(self, label: str = "tc") -> int:
        return sum(t.preemptions for t in self.by_criticality(label))

    def switches(self, label: str = "tc") -> int:
        return sum(t.context_switches for t in self.by_criticality(label))

    @property
    def max_lazy_wait(self) -> int:
        return max((t.lazy_wait_max for t in self.threads), default=0)

    @property
    def busy_ticks(self) -> int:
        return sum(t.cpu_ticks for t in self.threads)

    def fault_count(self, kind: str) -> int:
        return sum(1 for f in self.faults if f.kind == kind)

    def realized_shares(self) -> List[Tuple[int, Fraction]]:
        busy = self.busy_ticks
        return [(t.tid, Fraction(t.cpu_ticks, busy) if busy else Fraction(0)) for t in self.threads]


def build_report(sim: "Simulation") -> MetricsReport:
    space = sim.space.space_report()
    allocations = {a.tid: a for a in sim.space.all_allocations()}
    threads = []
    for tid in sorted(sim.threads):
        thread = sim.threads[tid]
        if not thread.arrived:
            continue
        alloc = allocations.get(tid)
        threads.append(ThreadMetrics(
            tid=tid,
            ordinal=thread.ordinal,
            role=thread.role,
            group=thread.group.value,
            criticality=CRITICALITY_LABELS[thread.requested_criticality],
            policy=thread.policy.name.lower(),
            nice=thread.nice.value,
            failed=thread.failed,
            arrival_tick=thread.arrival_tick,
            exit_tick=thread.exit_tick,
            cpu_ticks=thread.cpu_ticks,
            context_switches=thread.context_switches,
            preemptions=thread.preemptions,
            response_times=thread.response_times(),
            lazy_wait_max=sim.mediator.lazy_waits.get(tid, 0),
            stack_reserved_kib=alloc.reserved_kib if alloc else 0,
            stack_peak_kib=alloc.peak_used_kib if alloc else 0,
            zone=sim.space.zone_or_unknown(alloc).name.lower() if alloc else "unknown",
        ))

    return MetricsReport(
        scenario=sim.config.name,
        mode=sim.mode.value,
        seed=sim.config.seed,
        elapsed_ticks=sim.now,
        idle_ticks=sim.idle_ticks,
        context_switches=sim.context_switches,
        threads=threads,
        group_cpu_ticks={name.value: ticks for name, ticks in sim.sched.group_cpu_ticks().items()},
        faults=[
            FaultRecord(tick=f.tick, tid=f.tid, kind=f.kind.value, request_kib=f.request_kib, used_kib=f.used_kib)
            for f in sim.space.fault_ledger
        ],
        first_exhaustion_ordinal=sim.first_exhaustion_ordinal,
        failed_creations=len(sim.failed_creations),
        space=SpaceSummary(
            allocated_kib=space.allocated_kib,
            guard_kib=space.guard_kib,
            committed_kib=space.committed_kib,
            actual_peak_kib=space.actual_peak_kib,
            overhead_ratio=space.overhead_ratio,
            overhead_above_actual=space.overhead_above_actual,
        ),
        events_total=sum(1 for e in sim.events if e.arrival_tick < sim.now),
        events_completed=sum(1 for e in sim.events if e.completed),
        events_undeliverable=len(sim.undeliverable),
        mediator_link_ops=sim.mediator.link_ops,
        migrations=[
            MigrationRecord(tick=m.tick, tid=m.tid, source=m.source, target=m.target)
            for m in sim.mediator.event_log
        ],
        strict_delay_violations=sim.strict_delay_violations,
        schedule_trace=list(sim.schedule_trace) if sim.keep_trace else None,
        table_records=sim.registry.records(),
    )
