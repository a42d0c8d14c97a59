"""
Fair scheduler baseline.

Two-level scheduling on a single simulated CPU:

1. Group level: each of the four groups accrues
   ``group_vruntime = consumed_ticks / group_share``; the active group with
   the smallest value (ties in Urgent < Normal < Service < Background order)
   is selected.
2. Thread level: the group's queue yields its minimum (vruntime, tid).

When the CPU Mediator's Fast Region is non-empty, selection is delegated to
the mediator instead.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from error_handling import InvariantViolation, NotFoundError, ValidationError
from .models import (
    GROUP_ORDER,
    TICK_NS,
    GroupName,
    SchedEntity,
    ThreadState,
)
from .runqueue import RunQueue
from .weights import LINEAR, WeightTable, weight_of

logger = logging.getLogger("tek.scheduler")

DEFAULT_GROUP_SHARES: Mapping[GroupName, Fraction] = {
    GroupName.URGENT: Fraction(40, 100),
    GroupName.NORMAL: Fraction(30, 100),
    GroupName.SERVICE: Fraction(20, 100),
    GroupName.BACKGROUND: Fraction(10, 100),
}


@dataclass
class SchedGroup:
    name: GroupName
    group_share: Fraction
    queue: RunQueue
    consumed_ticks: int = 0
    group_vruntime: Fraction = field(default_factory=Fraction)

    @property
    def order(self) -> int:
        return self.name.order


def charge_vruntime(thread: SchedEntity, real_ns: int, table: WeightTable = LINEAR) -> Fraction:
    """
    Charge ``real_ns`` of CPU to a thread's virtual run-time.

    new vruntime = old + real_ns * weight(0) / weight(nice); the result is
    stored on the thread and returned.
    """
    if real_ns < 0:
        raise ValidationError("real_ns must be non-negative", details={"real_ns": real_ns})
    if real_ns:
        thread.vruntime = thread.vruntime + real_ns * table.nice0 / weight_of(thread.nice, table)
    return thread.vruntime


def new_thread_vruntime(group: SchedGroup) -> Fraction:
    """Starting vruntime for a thread admitted to ``group``: max(0, group min)."""
    current = group.queue.min_vruntime()
    return max(Fraction(0), current if current is not None else Fraction(0))


class SchedulerState:
    """
    Group-aware run queues plus the CPU Mediator's regions.

    Owns the set of live threads; a runnable thread is in exactly one of
    its group queue, the Fast Region or the Lazy Region.
    """

    def __init__(
        self,
        table: WeightTable = LINEAR,
        group_shares: Optional[Mapping[GroupName, Fraction]] = None,
        instrumented: bool = False,
        max_lazy_delay: Optional[int] = None,
    ):
        # Import here to avoid circular dependency
        from .mediator import CPUMediator

        shares = dict(DEFAULT_GROUP_SHARES)
        shares.update({GroupName(k): Fraction(v) for k, v in (group_shares or {}).items()})
        for name, share in shares.items():
            if share <= 0:
                raise ValidationError(
                    f"group share for {name.value} must be positive",
                    details={"field": f"group_shares.{name.value}"},
                )

        self.table = table
        self.now = 0
        self.threads: Dict[int, SchedEntity] = {}
        self.groups: Dict[GroupName, SchedGroup] = {
            name: SchedGroup(name=name, group_share=shares[name], queue=RunQueue(instrumented))
            for name in GROUP_ORDER
        }
        self.min_group_vruntime = Fraction(0)
        self.mediator = CPUMediator(self, max_lazy_delay=max_lazy_delay)

    # -- membership -------------------------------------------------------

    def register(self, thread: SchedEntity) -> None:
        self.threads[thread.tid] = thread

    def thread(self, tid: int) -> SchedEntity:
        thread = self.threads.get(tid)
        if thread is None or thread.state is ThreadState.DEAD:
            raise NotFoundError("thread", tid, "no such thread")
        return thread

    def in_group_queue(self, tid: int) -> bool:
        thread = self.threads.get(tid)
        return thread is not None and tid in self.groups[thread.group].queue

    def enqueue(self, thread: SchedEntity, vruntime: Optional[Fraction] = None) -> None:
        """Insert a thread into its group queue, activating the group if needed."""
        group = self.groups[thread.group]
        if not group.queue:
            group.group_vruntime = max(group.group_vruntime, self.min_group_vruntime)
        if vruntime is not None:
            thread.vruntime = vruntime
        group.queue.insert(thread.tid, thread.vruntime)
        thread.state = ThreadState.RUNNABLE

    def admit(self, thread: SchedEntity) -> None:
        """
        Make a new or waking thread runnable.

        It is placed at ``max(own vruntime, new_thread_vruntime(group))``.
        While SCHED_TEK is active the mediator places it in a region instead.
        """
        self.threads[thread.tid] = thread
        placed = max(thread.vruntime, new_thread_vruntime(self.groups[thread.group]))
        if self.mediator.active:
            thread.vruntime = placed
            self.mediator.admit_during_tek(thread)
        else:
            self.enqueue(thread, placed)

    def dequeue(self, tid: int) -> None:
        """Remove a thread from whichever queue or region holds it."""
        thread = self.threads[tid]
        group = self.groups[thread.group]
        if tid in group.queue:
            group.queue.remove(tid)
        else:
            self.mediator.unlink(tid)

    def retire(self, tid: int) -> None:
        thread = self.threads.get(tid)
        if thread is None:
            return
        if thread.state.schedulable:
            self.dequeue(tid)
        thread.state = ThreadState.DEAD

    # -- selection --------------------------------------------------------

    def active_groups(self) -> List[SchedGroup]:
        return [g for g in self.groups.values() if g.queue]

    def _refresh_group_floor(self) -> None:
        active = self.active_groups()
        if active:
            floor = min(g.group_vruntime for g in active)
            if floor > self.min_group_vruntime:
                self.min_group_vruntime = floor

    def select_group(self) -> Optional[SchedGroup]:
        """Active group with the smallest consumed/share ratio."""
        active = self.active_groups()
        if not active:
            return None
        return min(active, key=lambda g: (g.group_vruntime, g.order))

    def pick_next(self) -> Optional[int]:
        """
        Choose the thread to run for the next tick.

        Returns:
            A tid, or None for idle
        """
        if self.mediator.fast:
            return self.mediator.mediator_pick()
        self._refresh_group_floor()
        group = self.select_group()
        if group is None:
            return None
        return group.queue.peek_min()[1]

    def account(self, tid: int, ticks: int = 1) -> Fraction:
        """Charge ``ticks`` of CPU to a thread and its origin group."""
        thread = self.threads[tid]
        group = self.groups[thread.group]
        queued = tid in group.queue
        if queued:
            group.queue.remove(tid)
        charge_vruntime(thread, ticks * TICK_NS, self.table)
        if queued:
            group.queue.insert(tid, thread.vruntime)
        group.consumed_ticks += ticks
        group.group_vruntime += Fraction(ticks) / group.group_share
        return thread.vruntime

    # -- checks -----------------------------------------------------------

    def locations(self) -> Dict[int, str]:
        """Map each queued tid to 'group', 'fast' or 'lazy'; raises on duplicates."""
        seen: Dict[int, str] = {}

        def place(tids: Iterable[int], where: str) -> None:
            for tid in tids:
                if tid in seen:
                    raise InvariantViolation(
                        "exclusivity",
                        f"tid {tid} is in both {seen[tid]} and {where}",
                        details={"tid": tid},
                    )
                seen[tid] = where

        for group in self.groups.values():
            place(group.queue.tids(), "group")
        place(self.mediator.fast.tids(), "fast")
        place(self.mediator.lazy.tids(), "lazy")
        return seen

    def check_invariants(self) -> None:
        seen = self.locations()
        for tid, thread in self.threads.items():
            runnable = thread.state.schedulable
            if runnable and tid not in seen:
                raise InvariantViolation("exclusivity", f"runnable tid {tid} is in no queue", {"tid": tid})
            if not runnable and tid in seen:
                raise InvariantViolation(
                    "exclusivity", f"tid {tid} in state {thread.state.value} is still queued", {"tid": tid}
                )
        for group in self.groups.values():
            entries = list(group.queue)
            if entries != sorted(entries):
                raise InvariantViolation("queue_order", f"group {group.name.value} queue out of order")
        if self.mediator.lazy and not self.mediator.fast:
            raise InvariantViolation("lazy_without_fast", "Lazy Region non-empty while Fast Region is empty")

    def group_cpu_ticks(self) -> Dict[GroupName, int]:
        return {name: g.consumed_ticks for name, g in self.groups.items()}

    def snapshot(self) -> List[Tuple[int, str, int, int]]:
        """(tid, group, policy, nice) for every live thread, sorted by tid."""
        return sorted(
            (t.tid, t.group.value, int(t.policy), t.nice.value)
            for t in self.threads.values()
            if t.state is not ThreadState.DEAD
        )
