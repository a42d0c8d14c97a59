"""
Workload generation from a scenario.

Everything random is drawn here or from per-thread streams, keyed by
(seed, stream, ordinal), so baseline and SCHED_TEK runs of one scenario see
the same arrivals, phase lengths, stack demands and events.
"""
from dataclasses import dataclass, field
from typing import Dict, List

from bench.config import ScenarioConfig
from scheduler.models import NiceValue
from .prng import XorShift64Star
from .thread import SimThread, UserEvent

FIRST_TID = 1000

STREAM_BEHAVIOR = 1
STREAM_STACK = 2
STREAM_EVENTS = 3


@dataclass
class Workload:
    threads: List[SimThread] = field(default_factory=list)
    events: List[UserEvent] = field(default_factory=list)

    def by_role(self) -> Dict[str, List[int]]:
        roles: Dict[str, List[int]] = {}
        for thread in self.threads:
            roles.setdefault(thread.role, []).append(thread.tid)
        return roles


def demand_trace(peak_kib: int):
    """Usage ramp reaching ``peak_kib`` on the third tick of a thread's life."""
    if peak_kib <= 0:
        return []
    return [(0, max(1, peak_kib // 4)), (1, max(1, peak_kib // 2)), (2, peak_kib)]


def build_workload(config: ScenarioConfig) -> Workload:
    workload = Workload()
    ordinal = 0
    for spec in config.threads:
        for k in range(spec.count):
            ordinal += 1
            peak = 0
            if spec.stack_peak_kib is not None:
                stack_rng = XorShift64Star.derive(config.seed, STREAM_STACK, ordinal)
                peak = stack_rng.randint(spec.stack_peak_kib.lo, spec.stack_peak_kib.hi)
            workload.threads.append(SimThread(
                tid=FIRST_TID + ordinal - 1,
                ordinal=ordinal,
                group=spec.group,
                nice=NiceValue(spec.nice),
                role=spec.role,
                arrival_tick=spec.arrival + k * spec.arrival_step,
                behavior=list(spec.behavior),
                loop=spec.loop,
                rng=XorShift64Star.derive(config.seed, STREAM_BEHAVIOR, ordinal),
                requested_policy=spec.policy,
                requested_criticality=spec.criticality,
                stack_request_kib=spec.stack_request_kib,
                stack_demand_trace=demand_trace(peak),
            ))

    roles = workload.by_role()
    planned = []
    for index, spec in enumerate(config.events):
        rng = XorShift64Star.derive(config.seed, STREAM_EVENTS, index)
        for k, tid in enumerate(roles.get(spec.role, [])):
            i = 0
            while spec.count is None or i < spec.count:
                base = spec.start + k * spec.stagger + i * spec.period
                if base >= config.horizon_ticks:
                    break
                planned.append((base + rng.randint(0, spec.jitter), tid, index, i))
                i += 1

    planned.sort()
    workload.events = [
        UserEvent(event_id=n, target_tid=tid, arrival_tick=tick)
        for n, (tick, tid, _, _) in enumerate(planned)
    ]
    return workload
