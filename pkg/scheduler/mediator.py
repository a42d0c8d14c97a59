"""
CPU Mediator: the SCHED_TEK policy.

When a time-critical thread switches to SCHED_TEK the mediator

1. moves every runnable time-critical thread of the caller's group from its
   group queue into the Fast Region, then
2. moves every runnable non-time-critical thread, system-wide, into the
   Lazy Region.

Fast members run exclusively. Lazy members get no CPU until the Fast Region
empties, at which point they are unlinked and put back into their original
groups with their saved policy and nice.

Regions are intrusive doubly-linked lists with a tid index, so link and
unlink are O(1).
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Dict, Iterator, List, Optional, Tuple

from error_handling import NotFoundError, ValidationError, get_tracer
from .models import (
    Criticality,
    GroupName,
    NiceValue,
    SchedEntity,
    SchedParams,
    SchedPolicy,
    ThreadState,
)

if TYPE_CHECKING:
    from .core import SchedulerState

logger = logging.getLogger("tek.mediator")


class RegionKind:
    FAST = "fast"
    LAZY = "lazy"


class RegionNode:
    """Region membership plus the placement saved at migration time."""

    __slots__ = ("tid", "origin", "saved_policy", "saved_nice", "saved_vruntime",
                 "waiting_since", "linked_at", "prev", "next")

    def __init__(
        self,
        tid: int,
        origin: Optional[GroupName] = None,
        saved_policy: SchedPolicy = SchedPolicy.NORMAL,
        saved_nice: NiceValue = NiceValue(0),
        saved_vruntime: Fraction = Fraction(0),
        waiting_since: int = 0,
    ):
        self.tid = tid
        self.origin = origin
        self.saved_policy = saved_policy
        self.saved_nice = saved_nice
        self.saved_vruntime = saved_vruntime
        self.waiting_since = waiting_since
        self.linked_at = waiting_since
        self.prev: Optional[RegionNode] = None
        self.next: Optional[RegionNode] = None


class Region:
    """Doubly-linked list with sentinel nodes and an O(1) tid index."""

    def __init__(self, kind: str):
        self.kind = kind
        self._head = RegionNode(-1)
        self._tail = RegionNode(-1)
        self._head.next = self._tail
        self._tail.prev = self._head
        self._index: Dict[int, RegionNode] = {}

    def __len__(self) -> int:
        return len(self._index)

    def __bool__(self) -> bool:
        return bool(self._index)

    def __contains__(self, tid: int) -> bool:
        return tid in self._index

    def __iter__(self) -> Iterator[RegionNode]:
        node = self._head.next
        while node is not self._tail:
            yield node
            node = node.next

    def node(self, tid: int) -> RegionNode:
        return self._index[tid]

    def link(self, node: RegionNode) -> None:
        """Append at the tail."""
        node.prev = self._tail.prev
        node.next = self._tail
        self._tail.prev.next = node
        self._tail.prev = node
        self._index[node.tid] = node

    def unlink(self, tid: int) -> RegionNode:
        node = self._index.pop(tid)
        node.prev.next = node.next
        node.next.prev = node.prev
        node.prev = node.next = None
        return node

    def tids(self) -> Tuple[int, ...]:
        return tuple(node.tid for node in self)


@dataclass
class MigrationEvent:
    """One line of the migration log: a thread moved between placements."""
    tick: int
    tid: int
    source: str
    target: str


@dataclass
class MigrationReport:
    tick: int
    caller: int
    fast: List[int] = field(default_factory=list)
    lazy: List[int] = field(default_factory=list)


@dataclass
class RestorationReport:
    tick: int
    restored: List[int] = field(default_factory=list)


class CPUMediator:
    """
    Owner of the Fast and Lazy Regions.

    Args:
        state: The scheduler whose group queues threads migrate out of
        max_lazy_delay: Optional starvation bound in ticks; None keeps Lazy
            threads strictly delayed while the Fast Region is non-empty
    """

    def __init__(self, state: "SchedulerState", max_lazy_delay: Optional[int] = None):
        if max_lazy_delay is not None and max_lazy_delay <= 0:
            raise ValidationError("max_lazy_delay must be positive", details={"field": "max_lazy_delay"})
        self.state = state
        self.max_lazy_delay = max_lazy_delay
        self.fast = Region(RegionKind.FAST)
        self.lazy = Region(RegionKind.LAZY)
        self.link_ops = 0
        self.event_log: List[MigrationEvent] = []
        self.lazy_waits: Dict[int, int] = {}

    @property
    def active(self) -> bool:
        return bool(self.fast)

    def location(self, tid: int) -> Optional[str]:
        if tid in self.fast:
            return RegionKind.FAST
        if tid in self.lazy:
            return RegionKind.LAZY
        return None

    # -- region plumbing --------------------------------------------------

    def _log(self, tid: int, source: str, target: str) -> None:
        self.event_log.append(MigrationEvent(self.state.now, tid, source, target))
        logger.info(
            "migrate",
            extra={"tick": self.state.now, "tid": tid, "from": source, "to": target},
        )

    def _link(self, region: Region, thread: SchedEntity) -> None:
        region.link(RegionNode(
            tid=thread.tid,
            origin=thread.group,
            saved_policy=thread.policy,
            saved_nice=thread.nice,
            saved_vruntime=thread.vruntime,
            waiting_since=self.state.now,
        ))
        self.link_ops += 1
        thread.state = ThreadState.IN_FAST if region is self.fast else ThreadState.IN_LAZY

    def _migrate(self, region: Region, thread: SchedEntity) -> None:
        self.state.groups[thread.group].queue.remove(thread.tid)
        self._link(region, thread)
        self._log(thread.tid, thread.group.value, region.kind)

    def _note_lazy_wait(self, node: RegionNode) -> None:
        waited = self.state.now + 1 - node.linked_at
        if waited > self.lazy_waits.get(node.tid, 0):
            self.lazy_waits[node.tid] = waited

    def unlink(self, tid: int) -> RegionNode:
        """Remove a blocking or terminating thread from its region."""
        region = self.fast if tid in self.fast else self.lazy
        if tid not in region:
            raise NotFoundError("thread", tid, f"tid {tid} is not queued")
        self.link_ops += 1
        node = region.unlink(tid)
        if region is self.lazy:
            self._note_lazy_wait(node)
        return node

    def admit_during_tek(self, thread: SchedEntity) -> None:
        """A thread becoming runnable while SCHED_TEK is active joins a region directly."""
        if thread.criticality is Criticality.TIME_CRITICAL:
            self._link(self.fast, thread)
            self._log(thread.tid, "admit", RegionKind.FAST)
        else:
            self._link(self.lazy, thread)
            self._log(thread.tid, "admit", RegionKind.LAZY)

    # -- operations -------------------------------------------------------

    def set_sched_param(self, tid: int, params: SchedParams) -> Optional[MigrationReport]:
        """
        Change a thread's policy and nice.

        Switching a time-critical thread to SCHED_TEK triggers ``enter_tek``
        in the same tick.

        Raises:
            NotFoundError: Unknown or dead tid ("no such thread")
            ValidationError: SCHED_TEK on a thread that is not time-critical
        """
        thread = self.state.thread(tid)
        if params.policy is SchedPolicy.TEK and thread.criticality is not Criticality.TIME_CRITICAL:
            raise ValidationError("criticality mismatch", details={"tid": tid})

        thread.policy = params.policy
        thread.nice = params.priority
        if tid in self.lazy:
            node = self.lazy.node(tid)
            node.saved_policy = params.policy
            node.saved_nice = params.priority

        if params.policy is SchedPolicy.TEK:
            return self.enter_tek(tid)
        if tid in self.fast:
            self._leave_fast(thread)
        return None

    def _leave_fast(self, thread: SchedEntity) -> None:
        """A Fast member no longer under SCHED_TEK rejoins its group queue."""
        self.unlink(thread.tid)
        current = self.state.groups[thread.group].queue.min_vruntime()
        floor = current if current is not None else Fraction(0)
        self.state.enqueue(thread, max(thread.vruntime, floor))
        self._log(thread.tid, RegionKind.FAST, thread.group.value)

    def enter_tek(self, tid: int) -> MigrationReport:
        """
        Migrate the caller's group's time-critical threads to the Fast Region
        and every runnable non-time-critical thread to the Lazy Region.

        Idempotent for threads that are already in a region.

        Raises:
            ValidationError: Caller is not a live time-critical SCHED_TEK thread
        """
        thread = self.state.threads.get(tid)
        if (
            thread is None
            or thread.state is ThreadState.DEAD
            or thread.criticality is not Criticality.TIME_CRITICAL
            or thread.policy is not SchedPolicy.TEK
        ):
            raise ValidationError("not eligible for SCHED_TEK", details={"tid": tid})

        report = MigrationReport(tick=self.state.now, caller=tid)
        tracer = get_tracer(__name__)
        with tracer.start_as_current_span("tek.mediator.enter_tek") as span:
            span.set_attribute("tek.tid", tid)

            group = self.state.groups[thread.group]
            for peer_tid in group.queue.tids():
                peer = self.state.threads[peer_tid]
                if peer.criticality is Criticality.TIME_CRITICAL:
                    self._migrate(self.fast, peer)
                    report.fast.append(peer_tid)

            if self.fast:
                for other in self.state.groups.values():
                    for peer_tid in other.queue.tids():
                        peer = self.state.threads[peer_tid]
                        if peer.criticality is not Criticality.TIME_CRITICAL:
                            self._migrate(self.lazy, peer)
                            report.lazy.append(peer_tid)

            span.set_attribute("tek.fast_count", len(report.fast))
            span.set_attribute("tek.lazy_count", len(report.lazy))
        return report

    def mediator_pick(self) -> Optional[int]:
        """
        Minimum (vruntime, tid) member of the Fast Region, or None if empty.

        With ``max_lazy_delay`` set, the longest-waiting Lazy member that has
        reached the bound is granted this tick instead.
        """
        if not self.fast:
            return None
        if self.max_lazy_delay is not None and self.lazy:
            starved = [
                (node.waiting_since, node.tid)
                for node in self.lazy
                if self.state.now - node.waiting_since >= self.max_lazy_delay
            ]
            if starved:
                _, tid = min(starved)
                self.lazy.node(tid).waiting_since = self.state.now + 1
                return tid
        threads = self.state.threads
        return min(self.fast, key=lambda n: (threads[n.tid].vruntime, n.tid)).tid

    def exit_tek_if_empty(self) -> Optional[RestorationReport]:
        """
        Restore every Lazy member once the Fast Region is empty.

        Each thread goes back to its origin group with its saved policy and
        nice, at max(saved vruntime, origin group minimum); group minimums are
        taken before any thread is re-inserted.
        """
        if self.fast or not self.lazy:
            return None

        floors: Dict[GroupName, Fraction] = {}
        for name, group in self.state.groups.items():
            current = group.queue.min_vruntime()
            floors[name] = current if current is not None else Fraction(0)

        report = RestorationReport(tick=self.state.now)
        for node in list(self.lazy):
            self.lazy.unlink(node.tid)
            self.link_ops += 1
            self._note_lazy_wait(node)
            thread = self.state.threads[node.tid]
            thread.group = node.origin
            thread.policy = node.saved_policy
            thread.nice = node.saved_nice
            placed = max(node.saved_vruntime, thread.vruntime, floors[node.origin])
            self.state.enqueue(thread, placed)
            self._log(node.tid, RegionKind.LAZY, node.origin.value)
            report.restored.append(node.tid)
        return report
