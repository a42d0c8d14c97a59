"""
Model of a 32-bit user address space holding thread stacks.

Every stack reservation is followed by one guard page. The sum of
reservations, guards and the non-stack reservation never exceeds the user
space; a request that would overflow it is recorded as an
AllocationExhaustion fault and changes nothing else.
"""
import logging
from fractions import Fraction
from typing import Dict, List, Optional, Union

from error_handling import AlreadyExistsError, NotFoundError, ValidationError
from .history import StackHistory
from .models import (
    DEFAULT_PAGE_SIZE,
    DEFAULT_RESERVED_BYTES,
    DEFAULT_STACK_KIB,
    DEFAULT_TOTAL_USER_BYTES,
    GUARD_KIB,
    KIB,
    MAX_STACK_KIB,
    MIN_STACK_KIB,
    FaultEvent,
    FaultKind,
    SpaceReport,
    StackAdvice,
    StackAllocation,
    StackPolicy,
    StackZoneConfig,
    Zone,
    round_up_page,
)
from .zones import classify_zone

logger = logging.getLogger("tek.stack_tuner")


class AddressSpaceModel:
    """
    Stack allocations over a fixed user-space budget.

    Args:
        total_user_bytes: User address space size (default 3 GiB)
        reserved_bytes: Code/data/heap reservation (default 512 MiB)
        page_size: Page size in bytes; must be 4096
        default_stack_kib: FixedSize default and fallback request
        max_stack_kib: Upper clamp for advised sizes
        zone_config: Low/High zone boundaries
        history: Role watermarks carried across runs
    """

    def __init__(
        self,
        total_user_bytes: int = DEFAULT_TOTAL_USER_BYTES,
        reserved_bytes: int = DEFAULT_RESERVED_BYTES,
        page_size: int = DEFAULT_PAGE_SIZE,
        default_stack_kib: int = DEFAULT_STACK_KIB,
        max_stack_kib: int = MAX_STACK_KIB,
        zone_config: Optional[StackZoneConfig] = None,
        history: Optional[StackHistory] = None,
    ):
        if page_size != DEFAULT_PAGE_SIZE:
            raise ValidationError("page_size must be 4096", details={"field": "page_size"})
        if reserved_bytes < 0 or reserved_bytes > total_user_bytes:
            raise ValidationError(
                "reserved_bytes must lie within the user space",
                details={"field": "reserved_bytes"},
            )
        for name, value in (("default_stack_kib", default_stack_kib), ("max_stack_kib", max_stack_kib)):
            if value < MIN_STACK_KIB or value % (page_size // KIB):
                raise ValidationError(
                    f"{name} must be a page multiple of at least {MIN_STACK_KIB} KiB",
                    details={"field": name},
                )

        self.total_user_bytes = total_user_bytes
        self.reserved_bytes = reserved_bytes
        self.page_size = page_size
        self.default_stack_kib = default_stack_kib
        self.max_stack_kib = max_stack_kib
        self.zone_config = zone_config or StackZoneConfig()
        self.history = history if history is not None else StackHistory(max_stack_kib, self.zone_config)

        self.allocations: Dict[int, StackAllocation] = {}
        self.retired: List[StackAllocation] = []
        self.fault_ledger: List[FaultEvent] = []
        self._committed_kib = 0

    # -- budget -------------------------------------------------------------

    @property
    def budget_kib(self) -> int:
        return (self.total_user_bytes - self.reserved_bytes) // KIB

    @property
    def committed_kib(self) -> int:
        """Reservations plus guards of live allocations."""
        return self._committed_kib

    @property
    def free_kib(self) -> int:
        return self.budget_kib - self._committed_kib

    # -- operations -----------------------------------------------------------

    def _reservation(self, request_kib: Optional[int], policy: StackPolicy, role: str) -> int:
        request = request_kib or self.default_stack_kib
        if policy is StackPolicy.FIXED_SIZE:
            return round_up_page(max(request, self.default_stack_kib))
        upper = max(round_up_page(request), MIN_STACK_KIB)
        if role in self.history:
            advised = self.history.advise(role).advised_kib
        else:
            advised = round_up_page(request)
        return min(max(round_up_page(advised), MIN_STACK_KIB), upper)

    def alloc_stack(
        self,
        tid: int,
        request_kib: Optional[int],
        policy: StackPolicy,
        tick: int = 0,
        role: str = "",
    ) -> Union[StackAllocation, FaultEvent]:
        """
        Reserve a stack plus guard page for ``tid``.

        FixedSize reserves max(request, default); Tuned reserves the role's
        advised size, clamped to [16 KiB, request or default], or the request
        itself when the role has no history.

        Returns:
            The allocation, or the AllocationExhaustion fault if the budget
            would be exceeded

        Raises:
            AlreadyExistsError: ``tid`` already has a live stack
        """
        if tid in self.allocations:
            raise AlreadyExistsError("stack", tid, "stack already allocated")
        if request_kib is not None and request_kib < 0:
            raise ValidationError("request_kib must be non-negative", details={"tid": tid})

        policy = StackPolicy(policy)
        reserved = self._reservation(request_kib, policy, role)
        cost = reserved + GUARD_KIB
        if self._committed_kib + cost > self.budget_kib:
            fault = FaultEvent(
                tick=tick,
                tid=tid,
                kind=FaultKind.ALLOCATION_EXHAUSTION,
                request_kib=reserved,
            )
            self.fault_ledger.append(fault)
            logger.warning(
                "stack allocation exhausted the address space",
                extra={"tick": tick, "tid": tid, "request_kib": reserved, "free_kib": self.free_kib},
            )
            return fault

        alloc = StackAllocation(
            tid=tid,
            reserved_kib=reserved,
            policy=policy,
            role=role,
            allocated_tick=tick,
        )
        self.allocations[tid] = alloc
        self._committed_kib += cost
        logger.debug("stack allocated", extra={"tid": tid, "reserved_kib": reserved, "policy": policy.value})
        return alloc

    def allocation(self, tid: int) -> StackAllocation:
        alloc = self.allocations.get(tid)
        if alloc is None:
            raise NotFoundError("thread", tid, "no such thread")
        return alloc

    def record_usage(self, tid: int, used_kib: int, tick: int) -> int:
        """
        Raise the watermark of ``tid`` to ``used_kib`` if higher.

        Usage past the reservation hits the guard page: the first overrun
        of a stack appends a GuardPageOverrun fault and marks it faulted.

        Returns:
            The updated peak in KiB

        Raises:
            NotFoundError: ``tid`` has no live stack ("no such thread")
        """
        alloc = self.allocation(tid)
        alloc.samples += 1
        if used_kib > alloc.peak_used_kib:
            alloc.peak_used_kib = used_kib
        if used_kib > alloc.reserved_kib and not alloc.faulted:
            alloc.faulted = True
            self.fault_ledger.append(FaultEvent(
                tick=tick,
                tid=tid,
                kind=FaultKind.GUARD_PAGE_OVERRUN,
                used_kib=used_kib,
            ))
            logger.warning(
                "guard page overrun",
                extra={"tick": tick, "tid": tid, "used_kib": used_kib, "reserved_kib": alloc.reserved_kib},
            )
        return alloc.peak_used_kib

    def zone_or_unknown(self, alloc: StackAllocation) -> Zone:
        if alloc.samples == 0:
            return Zone.UNKNOWN
        return classify_zone(alloc, self.zone_config)

    def advise_stack(self, tid_or_role: Union[int, str]) -> StackAdvice:
        """Advice for a role, or for the role of a thread's stack when given a tid."""
        if isinstance(tid_or_role, int):
            alloc = self.allocations.get(tid_or_role)
            if alloc is None:
                alloc = next((a for a in reversed(self.retired) if a.tid == tid_or_role), None)
            if alloc is None:
                raise NotFoundError("thread", tid_or_role, "no such thread")
            role = alloc.role
        else:
            role = tid_or_role
        return self.history.advise(role)

    def _retire_watermark(self, alloc: StackAllocation) -> None:
        if alloc.samples:
            self.history.record_lifetime(alloc.role, alloc.peak_used_kib, alloc.reserved_kib, alloc.tid)

    def free_stack(self, tid: int) -> StackAllocation:
        """Release a dead thread's stack; its watermark joins the role history."""
        alloc = self.allocation(tid)
        del self.allocations[tid]
        self._committed_kib -= alloc.committed_kib
        alloc.live = False
        self.retired.append(alloc)
        self._retire_watermark(alloc)
        return alloc

    def close_lifetimes(self) -> None:
        """Record every live watermark as a completed lifetime (process exit)."""
        for tid in sorted(self.allocations):
            self._retire_watermark(self.allocations[tid])

    def all_allocations(self) -> List[StackAllocation]:
        return sorted(self.retired + list(self.allocations.values()), key=lambda a: (a.allocated_tick, a.tid))

    def space_report(self) -> SpaceReport:
        """Totals over live and dead stacks; ratios are 0 when nothing was used."""
        allocs = self.all_allocations()
        allocated = sum(a.reserved_kib for a in allocs)
        guard = sum(a.guard_kib for a in allocs)
        actual = sum(a.peak_used_kib for a in allocs)
        if actual:
            ratio = Fraction(allocated, actual)
            above = Fraction(allocated - actual, actual)
        else:
            ratio = above = Fraction(0)
        return SpaceReport(
            allocated_kib=allocated,
            guard_kib=guard,
            committed_kib=allocated + guard,
            actual_peak_kib=actual,
            overhead_ratio=ratio,
            overhead_above_actual=above,
            threads=len(allocs),
        )

    def faults_of(self, kind: FaultKind) -> List[FaultEvent]:
        return [f for f in self.fault_ledger if f.kind is kind]
