"""
Scheduling domain types shared by the fair scheduler, the CPU Mediator,
the thread registry and the simulation kernel.
"""
from dataclasses import dataclass
from enum import Enum, IntEnum
from fractions import Fraction
from typing import Optional, Protocol

from error_handling import ValidationError

NICE_MIN = -20
NICE_MAX = 19

# Virtual nanoseconds, kept exact
VRuntime = Fraction

TICK_NS = 1_000_000


@dataclass(frozen=True, order=True)
class NiceValue:
    """User-visible priority in [-20, 19]; lower means more CPU."""
    value: int = 0

    def __post_init__(self):
        if isinstance(self.value, bool) or not isinstance(self.value, int):
            raise ValidationError(
                f"nice must be an integer, got {self.value!r}",
                details={"field": "nice", "value": repr(self.value)},
            )
        if not NICE_MIN <= self.value <= NICE_MAX:
            raise ValidationError(
                f"nice {self.value} outside [{NICE_MIN}, {NICE_MAX}]",
                details={"field": "nice", "value": self.value},
            )

    @property
    def index(self) -> int:
        return self.value + 20

    def __int__(self) -> int:
        return self.value


class SchedPolicy(IntEnum):
    """Scheduling policy; values are the on-wire byte in the thread table."""
    NORMAL = 0
    TEK = 7


class Criticality(IntEnum):
    """Write-once thread classification; UNSET until first assignment."""
    UNSET = 0
    TIME_CRITICAL = 1
    NON_TIME_CRITICAL = 2


class GroupName(str, Enum):
    """The four scheduling groups, in tie-break order."""
    URGENT = "urgent"
    NORMAL = "normal"
    SERVICE = "service"
    BACKGROUND = "background"

    @property
    def order(self) -> int:
        return GROUP_ORDER.index(self)


GROUP_ORDER = (GroupName.URGENT, GroupName.NORMAL, GroupName.SERVICE, GroupName.BACKGROUND)


@dataclass(frozen=True)
class SchedParams:
    """Arguments of the set-sched-param call: policy plus nice priority."""
    policy: SchedPolicy = SchedPolicy.NORMAL
    priority: NiceValue = NiceValue(0)

    @classmethod
    def of(cls, policy: SchedPolicy, nice: Optional[int] = 0) -> "SchedParams":
        return cls(policy=SchedPolicy(policy), priority=NiceValue(0 if nice is None else nice))


class ThreadState(str, Enum):
    RUNNABLE = "runnable"
    BLOCKED = "blocked"
    AWAITING_EVENT = "awaiting_event"
    IN_FAST = "in_fast"
    IN_LAZY = "in_lazy"
    DEAD = "dead"

    @property
    def schedulable(self) -> bool:
        return self in (ThreadState.RUNNABLE, ThreadState.IN_FAST, ThreadState.IN_LAZY)


class SchedEntity(Protocol):
    """What the scheduler needs from a thread; ``simulation.SimThread`` satisfies it."""
    tid: int
    group: GroupName
    nice: NiceValue
    policy: SchedPolicy
    criticality: Criticality
    vruntime: Fraction
    state: ThreadState
