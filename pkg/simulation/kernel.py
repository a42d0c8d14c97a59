"""
Deterministic discrete-time simulation kernel.

One tick is one simulated millisecond. Each tick:

1. threads arriving now are created (stack allocated, registered, started)
2. blocked threads whose sleep ended wake up
3. user events arriving now are delivered or queued
4. stack demand samples due now are recorded
5. ``pick_next`` chooses a thread (or idle), which is charged one tick
6. the CPU Mediator restores the Lazy Region if the Fast Region emptied
7. the Thread Monitor samples on its period

Given the same scenario and seed, two runs produce identical traces.
"""
import logging
from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Tuple

from bench.config import Mode, PhaseKind, ScenarioConfig
from error_handling import InvariantViolation, NotFoundError, ValidationError, get_tracer
from scheduler.core import SchedulerState
from scheduler.mediator import RegionKind
from scheduler.models import TICK_NS, Criticality, SchedParams, SchedPolicy, ThreadState
from scheduler.weights import table_for
from stack_tuner.address_space import AddressSpaceModel
from stack_tuner.history import StackHistory
from stack_tuner.models import KIB, FaultEvent, StackPolicy
from thread_registry.monitor import ThreadMonitor, ThreadSample
from thread_registry.table import ThreadInformationTable
from .metrics import MetricsReport, build_report
from .thread import SimThread, UserEvent
from .workload import build_workload

logger = logging.getLogger("tek.kernel")

TraceRow = Tuple[int, Optional[int], str]


class Simulation:
    """
    One isolated run of a scenario in a single mode.

    Args:
        config: Validated scenario
        mode: BASELINE (fair scheduler, fixed-size stacks) or TEK (SCHED_TEK
            honoured, tuned stacks)
        history: Stack watermarks from earlier runs of the same scenario
        trace: Keep the per-tick schedule trace
        check_invariants: Verify scheduler and accounting invariants every tick
    """

    def __init__(
        self,
        config: ScenarioConfig,
        mode: Mode,
        history: Optional[StackHistory] = None,
        trace: bool = False,
        check_invariants: bool = False,
    ):
        mode = Mode(mode)
        if mode is Mode.BOTH:
            raise ValidationError("a simulation runs a single mode", details={"field": "mode"})
        self.config = config
        self.mode = mode
        self.tek = mode is Mode.TEK
        self.check = check_invariants
        self.keep_trace = trace

        self.sched = SchedulerState(
            table=table_for(config.weight_table),
            group_shares=config.shares(),
            max_lazy_delay=config.max_lazy_delay,
        )
        self.mediator = self.sched.mediator
        self.space = AddressSpaceModel(
            total_user_bytes=config.address_space.total_kib * KIB,
            reserved_bytes=config.address_space.reserved_kib * KIB,
            default_stack_kib=config.fixed_stack_kib,
            max_stack_kib=config.max_stack_kib,
            zone_config=config.zones,
            history=history,
        )
        self.stack_policy = StackPolicy.TUNED if self.tek else StackPolicy.FIXED_SIZE
        self.registry = ThreadInformationTable(
            on_sched_param=self._apply_sched_param,
            on_criticality=self._apply_criticality,
        )
        self.monitor = ThreadMonitor(self.registry, config.monitor_period)

        workload = build_workload(config)
        self.threads: Dict[int, SimThread] = {t.tid: t for t in workload.threads}
        self.events: List[UserEvent] = workload.events

        self._arrivals: Dict[int, List[int]] = defaultdict(list)
        for thread in sorted(workload.threads, key=lambda t: (t.arrival_tick, t.tid)):
            self._arrivals[thread.arrival_tick].append(thread.tid)
        self._event_arrivals: Dict[int, List[UserEvent]] = defaultdict(list)
        for event in self.events:
            self._event_arrivals[event.arrival_tick].append(event)
        self._wakeups: Dict[int, List[int]] = defaultdict(list)
        self._stack_samples: Dict[int, List[Tuple[int, int]]] = defaultdict(list)

        self.now = 0
        self.prev_tid: Optional[int] = None
        self.idle_ticks = 0
        self.context_switches = 0
        self.creation_attempts = 0
        self.first_exhaustion_ordinal: Optional[int] = None
        self.failed_creations: List[int] = []
        self.undeliverable: List[UserEvent] = []
        self.strict_delay_violations = 0
        self.schedule_trace: List[TraceRow] = []
        self._pending_arrivals = len(workload.threads)
        self._live = 0
        self._notes: List[str] = []

    # -- hooks from the thread table ---------------------------------------------

    def _apply_criticality(self, tid: int, criticality: Criticality) -> None:
        self.threads[tid].criticality = criticality

    def _apply_sched_param(self, tid: int, params: SchedParams) -> None:
        report = self.mediator.set_sched_param(tid, params)
        if report and (report.fast or report.lazy):
            self._notes.append(f"enter_tek:{tid}")

    # -- lifecycle ----------------------------------------------------------------

    def _make_runnable(self, thread: SimThread) -> None:
        if thread.state.schedulable:
            return
        self.sched.admit(thread)
        if thread.policy is SchedPolicy.TEK and thread.criticality is Criticality.TIME_CRITICAL:
            report = self.mediator.enter_tek(thread.tid)
            if report.fast or report.lazy:
                self._notes.append(f"enter_tek:{thread.tid}")

    def _park(self, thread: SimThread, state: ThreadState) -> None:
        if thread.state.schedulable:
            self.sched.dequeue(thread.tid)
        thread.state = state

    def _complete_current(self, thread: SimThread, at: int) -> None:
        event = thread.current_event
        if event is None:
            return
        self.complete_event(event, at)
        thread.handled.append(event)
        thread.current_event = None

    def _run_phases(self, thread: SimThread, at: int) -> None:
        """Enter the thread's next phases starting at tick ``at``."""
        while True:
            kind, ticks = thread.next_phase()
            if kind is PhaseKind.COMPUTE:
                thread.remaining = ticks
                self._make_runnable(thread)
                return
            if kind is PhaseKind.BLOCK:
                self._park(thread, ThreadState.BLOCKED)
                thread.wake_tick = at + ticks
                self._wakeups[thread.wake_tick].append(thread.tid)
                return
            if kind is PhaseKind.AWAIT:
                self._complete_current(thread, at)
                if thread.pending_events:
                    thread.current_event = thread.pending_events.popleft()
                    continue
                self._park(thread, ThreadState.AWAITING_EVENT)
                return
            self._complete_current(thread, at)
            self._terminate(thread, at)
            return

    def _create(self, thread: SimThread) -> None:
        t = self.now
        self._pending_arrivals -= 1
        self.creation_attempts += 1
        thread.arrived = True
        result = self.space.alloc_stack(
            thread.tid, thread.stack_request_kib, self.stack_policy, tick=t, role=thread.role,
        )
        if isinstance(result, FaultEvent):
            thread.failed = True
            thread.state = ThreadState.DEAD
            thread.exit_tick = t
            self.failed_creations.append(thread.tid)
            if self.first_exhaustion_ordinal is None:
                self.first_exhaustion_ordinal = self.creation_attempts
            self._notes.append(f"fault:{thread.tid}")
            for event in thread.pending_events:
                self._undeliverable(event)
            thread.pending_events.clear()
            return

        self._live += 1
        thread.state = ThreadState.BLOCKED
        self.sched.register(thread)
        self.registry.register_thread(
            thread.tid,
            now_ns=t * TICK_NS,
            role=thread.role,
            priority=thread.nice.value,
            stack_kib=result.reserved_kib,
            vm_kib=result.committed_kib,
        )
        if thread.requested_criticality is not Criticality.UNSET:
            self.registry.set_attributes(thread.tid, criticality=thread.requested_criticality)
        for offset, used in thread.stack_demand_trace:
            self._stack_samples[t + offset].append((thread.tid, used))
        self._notes.append(f"create:{thread.tid}")

        self._run_phases(thread, t)
        if self.tek and thread.requested_policy is SchedPolicy.TEK and thread.alive:
            self.registry.set_attributes(
                thread.tid, policy=SchedPolicy.TEK, priority=thread.nice.value,
            )

    def _wake(self, thread: SimThread) -> None:
        if thread.state is not ThreadState.BLOCKED or thread.wake_tick != self.now:
            return
        thread.wake_tick = None
        self._run_phases(thread, self.now)

    def _terminate(self, thread: SimThread, at: int) -> None:
        if thread.state.schedulable:
            self.sched.retire(thread.tid)
        thread.state = ThreadState.DEAD
        thread.exit_tick = at
        self._live -= 1
        for event in thread.pending_events:
            self._undeliverable(event)
        thread.pending_events.clear()
        alloc = self.space.allocations.get(thread.tid)
        if alloc is not None:
            self.registry.refresh(thread.tid, **self._sample_of(thread).fields())
            self.space.free_stack(thread.tid)
        self.registry.freeze(thread.tid)
        self._notes.append(f"exit:{thread.tid}")

    # -- events -------------------------------------------------------------------

    def _undeliverable(self, event: UserEvent) -> None:
        event.undeliverable = True
        self.undeliverable.append(event)
        logger.debug("event undeliverable", extra={"event_id": event.event_id, "tid": event.target_tid})

    def _deliver(self, event: UserEvent) -> None:
        thread = self.threads[event.target_tid]
        if thread.state is ThreadState.DEAD:
            self._undeliverable(event)
            return
        if thread.alive and thread.state is ThreadState.AWAITING_EVENT and thread.current_event is None:
            thread.current_event = event
            self._notes.append(f"event:{event.event_id}")
            self._run_phases(thread, self.now)
        else:
            thread.pending_events.append(event)

    def inject_event(self, target_tid: int, tick: int) -> UserEvent:
        """
        Schedule a user event for ``target_tid`` at ``tick``.

        Raises:
            NotFoundError: Unknown target ("no such thread")
            ValidationError: ``tick`` is in the past
        """
        if target_tid not in self.threads:
            raise NotFoundError("thread", target_tid, "no such thread")
        if tick < self.now:
            raise ValidationError(f"event tick {tick} is before the current tick {self.now}")
        event = UserEvent(
            event_id=len(self.events),
            target_tid=target_tid,
            arrival_tick=tick,
        )
        self.events.append(event)
        self._event_arrivals[tick].append(event)
        return event

    def complete_event(self, event: UserEvent, tick: int) -> int:
        """Record ``event`` as handled at ``tick``; returns its response time."""
        if tick < event.arrival_tick:
            raise InvariantViolation(
                "causality",
                f"event {event.event_id} completed at {tick} before arriving at {event.arrival_tick}",
            )
        event.completion_tick = tick
        return event.response_time

    # -- the tick -----------------------------------------------------------------

    @property
    def finished(self) -> bool:
        return self.now >= self.config.horizon_ticks or (self._pending_arrivals == 0 and self._live == 0)

    def step(self) -> Optional[int]:
        """Advance one tick; returns the tid that ran, or None for idle."""
        t = self.now
        self.sched.now = t
        self._notes = []

        for tid in self._arrivals.pop(t, ()):
            self._create(self.threads[tid])
        for tid in self._wakeups.pop(t, ()):
            self._wake(self.threads[tid])
        for event in self._event_arrivals.pop(t, ()):
            self._deliver(event)
        for tid, used in self._stack_samples.pop(t, ()):
            if tid in self.space.allocations:
                self.space.record_usage(tid, used, t)
        if self.mediator.exit_tek_if_empty():
            self._notes.append("restore")

        chosen = self.sched.pick_next()
        if chosen is not None and self.mediator.fast and self.mediator.location(chosen) == RegionKind.LAZY:
            self.strict_delay_violations += 1

        if chosen != self.prev_tid:
            self.context_switches += 1
            if chosen is not None:
                self.threads[chosen].context_switches += 1
            if self.prev_tid is not None:
                prev = self.threads[self.prev_tid]
                if prev.state.schedulable:
                    prev.preemptions += 1

        if chosen is None:
            self.idle_ticks += 1
        else:
            thread = self.threads[chosen]
            self.sched.account(chosen)
            thread.cpu_ticks += 1
            thread.remaining -= 1
            if thread.remaining <= 0:
                self._run_phases(thread, t + 1)

        if self.mediator.exit_tek_if_empty():
            self._notes.append("restore")

        if self.monitor.due(t):
            self.monitor.monitor_sample(self)
        if self.check:
            self.check_invariants(elapsed=t + 1)
        if self.keep_trace:
            self.schedule_trace.append((t, chosen, ";".join(self._notes)))

        self.prev_tid = chosen
        self.now = t + 1
        return chosen

    def run(self) -> MetricsReport:
        while not self.finished:
            self.step()
        self.space.close_lifetimes()
        self.monitor.monitor_sample(self)
        if self.check:
            self.check_invariants()
        return build_report(self)

    # -- monitoring and checks ----------------------------------------------------

    def _sample_of(self, thread: SimThread) -> ThreadSample:
        alloc = self.space.allocations.get(thread.tid)
        return ThreadSample(
            tid=thread.tid,
            policy=int(thread.policy),
            priority=thread.nice.value,
            zone=int(self.space.zone_or_unknown(alloc)) if alloc else 0,
            stack_kib=alloc.reserved_kib if alloc else 0,
            vm_kib=alloc.committed_kib if alloc else 0,
            peak_kib=alloc.peak_used_kib if alloc else 0,
        )

    def live_samples(self) -> Iterable[ThreadSample]:
        for tid in sorted(self.space.allocations):
            yield self._sample_of(self.threads[tid])

    def check_invariants(self, elapsed: Optional[int] = None) -> None:
        elapsed = self.now if elapsed is None else elapsed
        self.sched.check_invariants()
        if self.config.max_lazy_delay is None and self.strict_delay_violations:
            raise InvariantViolation("strict_delay", "a Lazy thread ran while the Fast Region was non-empty")
        busy = sum(t.cpu_ticks for t in self.threads.values())
        if busy + self.idle_ticks != elapsed:
            raise InvariantViolation(
                "accounting",
                f"cpu {busy} + idle {self.idle_ticks} does not cover {elapsed} ticks",
            )
        if self.space.committed_kib > self.space.budget_kib:
            raise InvariantViolation("budget", "stack allocations exceed the address space")
        for thread in self.threads.values():
            if thread.state.schedulable and not thread.alive:
                raise InvariantViolation("lifecycle", f"tid {thread.tid} is queued but not alive")


def step(sim: Simulation) -> Optional[int]:
    return sim.step()


def inject_event(sim: Simulation, target_tid: int, tick: int) -> UserEvent:
    return sim.inject_event(target_tid, tick)


def run_scenario(
    config: ScenarioConfig,
    mode: Optional[Mode] = None,
    trace: bool = False,
    check_invariants: bool = False,
    history: Optional[StackHistory] = None,
) -> MetricsReport:
    """
    Run one mode of a scenario to its horizon or until every thread is dead.

    ``warmup_runs`` earlier runs of the same workload feed their stack
    watermarks forward before the measured run.
    """
    mode = Mode(mode or config.mode)
    if mode is Mode.BOTH:
        raise ValidationError("run_scenario takes a single mode; use run_modes", details={"field": "mode"})

    tracer = get_tracer(__name__)
    with tracer.start_as_current_span("tek.run_scenario") as span:
        span.set_attribute("tek.scenario", config.name)
        span.set_attribute("tek.mode", mode.value)
        span.set_attribute("tek.seed", str(config.seed))
        span.set_attribute("tek.horizon", config.horizon_ticks)

        history = history if history is not None else StackHistory(config.max_stack_kib, config.zones)
        for run in range(config.warmup_runs):
            logger.debug("warmup run", extra={"scenario": config.name, "mode": mode.value, "run": run})
            Simulation(config, mode, history=history).run()

        sim = Simulation(config, mode, history=history, trace=trace, check_invariants=check_invariants)
        report = sim.run()
        logger.info(
            "scenario finished",
            extra={"scenario": config.name, "mode": mode.value, "ticks": report.elapsed_ticks},
        )
        return report


def run_modes(config: ScenarioConfig, **kwargs) -> Dict[Mode, MetricsReport]:
    return {mode: run_scenario(config, mode, **kwargs) for mode in config.mode.modes()}
