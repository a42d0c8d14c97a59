"""
Simulated one-to-one thread and user events.
"""
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Deque, List, Optional, Tuple

from bench.config import PhaseKind, PhaseSpec
from scheduler.models import Criticality, GroupName, NiceValue, SchedPolicy, ThreadState
from .prng import XorShift64Star


@dataclass(eq=False)
class UserEvent:
    event_id: int
    target_tid: int
    arrival_tick: int
    completion_tick: Optional[int] = None
    undeliverable: bool = False

    @property
    def completed(self) -> bool:
        return self.completion_tick is not None

    @property
    def response_time(self) -> Optional[int]:
        if self.completion_tick is None:
            return None
        return self.completion_tick - self.arrival_tick


@dataclass(eq=False)
class SimThread:
    """
    One simulated thread. Satisfies ``scheduler.models.SchedEntity``.

    ``criticality`` starts UNSET and is assigned through the thread table at
    creation; ``requested_policy`` is the policy the workload asks for, applied
    only when SCHED_TEK is enabled.
    """
    tid: int
    ordinal: int
    group: GroupName
    nice: NiceValue
    role: str
    arrival_tick: int
    behavior: List[PhaseSpec]
    loop: bool
    rng: XorShift64Star
    requested_policy: SchedPolicy = SchedPolicy.NORMAL
    requested_criticality: Criticality = Criticality.NON_TIME_CRITICAL
    stack_request_kib: Optional[int] = None
    stack_demand_trace: List[Tuple[int, int]] = field(default_factory=list)

    policy: SchedPolicy = SchedPolicy.NORMAL
    criticality: Criticality = Criticality.UNSET
    vruntime: Fraction = field(default_factory=Fraction)
    state: ThreadState = ThreadState.BLOCKED
    arrived: bool = False
    failed: bool = False
    exit_tick: Optional[int] = None

    phase_index: int = -1
    remaining: int = 0
    wake_tick: Optional[int] = None

    cpu_ticks: int = 0
    context_switches: int = 0
    preemptions: int = 0
    pending_events: Deque[UserEvent] = field(default_factory=deque)
    current_event: Optional[UserEvent] = None
    handled: List[UserEvent] = field(default_factory=list)

    @property
    def alive(self) -> bool:
        return self.arrived and self.state is not ThreadState.DEAD

    def next_phase(self) -> Tuple[PhaseKind, int]:
        """
        Advance to the next behavior phase and draw its length.

        Returns (EXIT, 0) when a non-looping behavior runs out.
        """
        self.phase_index += 1
        if self.phase_index >= len(self.behavior):
            if not self.loop:
                return PhaseKind.EXIT, 0
            self.phase_index = 0
        phase = self.behavior[self.phase_index]
        if phase.ticks is None:
            return phase.kind, 0
        return phase.kind, self.rng.randint(phase.ticks.lo, phase.ticks.hi)

    def response_times(self) -> List[int]:
        return [event.response_time for event in self.handled]
