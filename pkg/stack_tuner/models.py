"""
Stack Tuner domain types. All sizes are KiB; a page is 4 KiB.
"""
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum, IntEnum
from fractions import Fraction
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

KIB = 1024
PAGE_KIB = 4
GUARD_KIB = PAGE_KIB
MIN_STACK_KIB = 16
DEFAULT_STACK_KIB = 8192
MAX_STACK_KIB = 8192
SAFETY_FACTOR = Fraction(3, 2)

DEFAULT_TOTAL_USER_BYTES = 3 * 1024 ** 3
DEFAULT_RESERVED_BYTES = 512 * 1024 ** 2
DEFAULT_PAGE_SIZE = 4096

LOW_ZONE_MESSAGE = "wasting virtual memory"
HIGH_ZONE_MESSAGE = "may end up with a stack overflow"


def round_up_page(kib: int) -> int:
    return -(-kib // PAGE_KIB) * PAGE_KIB


class StackPolicy(str, Enum):
    FIXED_SIZE = "fixed_size"
    TUNED = "tuned"


class Zone(IntEnum):
    """Peak-usage zone; values are the on-wire byte in the thread table."""
    UNKNOWN = 0
    LOW = 1
    NORMAL = 2
    HIGH = 3


class FaultKind(str, Enum):
    ALLOCATION_EXHAUSTION = "allocation_exhaustion"
    GUARD_PAGE_OVERRUN = "guard_page_overrun"


class StackZoneConfig(BaseModel):
    """Zone boundaries as fractions of the reservation; both bounds exclusive."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    low_frac: Decimal = Field(default=Decimal("0.25"), gt=0, lt=1)
    high_frac: Decimal = Field(default=Decimal("0.90"), gt=0, lt=1)

    @model_validator(mode="after")
    def _ordered(self) -> "StackZoneConfig":
        if self.low_frac >= self.high_frac:
            raise ValueError("low_frac must be below high_frac")
        return self

    @property
    def low(self) -> Fraction:
        return Fraction(self.low_frac)

    @property
    def high(self) -> Fraction:
        return Fraction(self.high_frac)


@dataclass
class StackAllocation:
    tid: int
    reserved_kib: int
    policy: StackPolicy
    role: str = ""
    guard_kib: int = GUARD_KIB
    peak_used_kib: int = 0
    samples: int = 0
    faulted: bool = False
    live: bool = True
    allocated_tick: int = 0

    @property
    def committed_kib(self) -> int:
        return self.reserved_kib + self.guard_kib

    @property
    def guard_range_kib(self) -> Tuple[int, int]:
        """Guard page offsets from the stack base; it sits past the usable range."""
        return self.reserved_kib, self.reserved_kib + self.guard_kib


@dataclass(frozen=True)
class FaultEvent:
    tick: int
    tid: int
    kind: FaultKind
    request_kib: Optional[int] = None
    used_kib: Optional[int] = None


@dataclass(frozen=True)
class StackAdvice:
    role: str
    advised_kib: int
    zone: Zone
    message: Optional[str] = None


@dataclass(frozen=True)
class SpaceReport:
    allocated_kib: int
    guard_kib: int
    committed_kib: int
    actual_peak_kib: int
    overhead_ratio: Fraction
    overhead_above_actual: Fraction
    threads: int = 0


@dataclass(frozen=True)
class Lifetime:
    """A completed thread lifetime: its final watermark and the reservation it ran under."""
    peak_kib: int
    reserved_kib: int
    tid: int = 0


@dataclass
class RoleRecord:
    role: str
    lifetimes: list = field(default_factory=list)

    @property
    def max_peak(self) -> Lifetime:
        return max(self.lifetimes, key=lambda life: (life.peak_kib, -life.tid))
