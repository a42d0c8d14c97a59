"""
Scenario configuration models.

A scenario names its workload (thread blocks and an event plan), the
scheduler setup (weight table, group shares, mediator bound) and the
address-space model. Every field is validated here; the text format lives
in ``bench.scenario``.
"""
import re
from decimal import Decimal
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic_core import PydanticCustomError

from error_handling import ValidationError
from scheduler.models import NICE_MAX, NICE_MIN, Criticality, GroupName, SchedPolicy
from scheduler.weights import WeightTableKind
from stack_tuner.models import (
    DEFAULT_RESERVED_BYTES,
    DEFAULT_STACK_KIB,
    DEFAULT_TOTAL_USER_BYTES,
    KIB,
    MAX_STACK_KIB,
    StackZoneConfig,
)

DEFAULT_HORIZON_TICKS = 60_000


class Mode(str, Enum):
    BASELINE = "baseline"
    TEK = "tek"
    BOTH = "both"

    def modes(self) -> Tuple["Mode", ...]:
        if self is Mode.BOTH:
            return (Mode.BASELINE, Mode.TEK)
        return (self,)


class PhaseKind(str, Enum):
    COMPUTE = "compute"
    BLOCK = "block"
    AWAIT = "await"
    EXIT = "exit"


_PHASE = re.compile(r"^(compute|block|await|exit)(?::(\d+)(?:-(\d+))?)?$")

CRITICALITY_NAMES = {
    "unset": Criticality.UNSET,
    "tc": Criticality.TIME_CRITICAL,
    "ntc": Criticality.NON_TIME_CRITICAL,
}
POLICY_NAMES = {"normal": SchedPolicy.NORMAL, "tek": SchedPolicy.TEK}


class TickRange(BaseModel):
    """Inclusive integer range written ``A`` or ``A-B``."""
    model_config = ConfigDict(frozen=True)

    lo: int = Field(ge=0)
    hi: int = Field(ge=0)

    @model_validator(mode="after")
    def _ordered(self) -> "TickRange":
        if self.lo > self.hi:
            raise ValueError(f"range {self.lo}-{self.hi} is empty")
        return self

    @classmethod
    def parse(cls, text) -> "TickRange":
        if isinstance(text, int):
            return cls(lo=text, hi=text)
        match = re.fullmatch(r"\s*(\d+)\s*(?:-\s*(\d+)\s*)?", str(text))
        if not match:
            raise ValueError(f"expected N or A-B, got {text!r}")
        lo = int(match.group(1))
        return cls(lo=lo, hi=int(match.group(2)) if match.group(2) else lo)

    def __str__(self) -> str:
        return str(self.lo) if self.lo == self.hi else f"{self.lo}-{self.hi}"


class PhaseSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: PhaseKind
    ticks: Optional[TickRange] = None

    @model_validator(mode="after")
    def _ticks_match_kind(self) -> "PhaseSpec":
        timed = self.kind in (PhaseKind.COMPUTE, PhaseKind.BLOCK)
        if timed and self.ticks is None:
            raise ValueError(f"{self.kind.value} needs a tick count")
        if timed and self.ticks.lo < 1:
            raise ValueError(f"{self.kind.value} needs at least 1 tick")
        if not timed and self.ticks is not None:
            raise ValueError(f"{self.kind.value} takes no tick count")
        return self

    def __str__(self) -> str:
        return self.kind.value if self.ticks is None else f"{self.kind.value}:{self.ticks}"


def parse_behavior(text: str) -> List[PhaseSpec]:
    phases = []
    for token in (t.strip() for t in text.split(",")):
        match = _PHASE.match(token)
        if not match:
            raise ValueError(f"unknown phase {token!r}")
        kind, lo, hi = match.groups()
        ticks = None
        if lo is not None:
            ticks = TickRange(lo=int(lo), hi=int(hi) if hi else int(lo))
        phases.append(PhaseSpec(kind=PhaseKind(kind), ticks=ticks))
    return phases


class ThreadSpec(BaseModel):
    """A block of ``count`` identical threads."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    count: int = Field(default=1, ge=0)
    group: GroupName = GroupName.NORMAL
    nice: int = Field(default=0, ge=NICE_MIN, le=NICE_MAX)
    policy: SchedPolicy = SchedPolicy.NORMAL
    criticality: Criticality = Criticality.NON_TIME_CRITICAL
    role: str = ""
    behavior: List[PhaseSpec] = Field(default_factory=lambda: [PhaseSpec(kind=PhaseKind.EXIT)])
    loop: bool = False
    arrival: int = Field(default=0, ge=0)
    arrival_step: int = Field(default=0, ge=0)
    stack_request_kib: Optional[int] = Field(default=None, ge=0)
    stack_peak_kib: Optional[TickRange] = None

    @field_validator("policy", mode="before")
    @classmethod
    def _policy_name(cls, value):
        if isinstance(value, str):
            if value not in POLICY_NAMES:
                raise ValueError(f"unknown policy {value!r}")
            return POLICY_NAMES[value]
        return value

    @field_validator("criticality", mode="before")
    @classmethod
    def _criticality_name(cls, value):
        if isinstance(value, str):
            if value not in CRITICALITY_NAMES:
                raise ValueError(f"unknown criticality {value!r}")
            return CRITICALITY_NAMES[value]
        return value

    @field_validator("behavior", mode="before")
    @classmethod
    def _behavior_text(cls, value):
        if isinstance(value, str):
            return parse_behavior(value)
        return value

    @field_validator("stack_peak_kib", mode="before")
    @classmethod
    def _peak_text(cls, value):
        if isinstance(value, (str, int)):
            return TickRange.parse(value)
        return value

    @model_validator(mode="after")
    def _tek_needs_time_critical(self) -> "ThreadSpec":
        if self.policy is SchedPolicy.TEK and self.criticality is not Criticality.TIME_CRITICAL:
            raise ValueError("criticality mismatch: policy tek requires criticality tc")
        if not self.behavior:
            raise ValueError("behavior must name at least one phase")
        return self


class EventSpec(BaseModel):
    """Periodic user events for every thread of ``role``."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    role: str
    start: int = Field(default=0, ge=0)
    period: int = Field(default=1000, ge=1)
    stagger: int = Field(default=0, ge=0)
    jitter: int = Field(default=0, ge=0)
    count: Optional[int] = Field(default=None, ge=0)


class AddressSpaceSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    total_kib: int = Field(default=DEFAULT_TOTAL_USER_BYTES // KIB, gt=0)
    reserved_kib: int = Field(default=DEFAULT_RESERVED_BYTES // KIB, ge=0)

    @model_validator(mode="after")
    def _fits(self) -> "AddressSpaceSpec":
        if self.reserved_kib > self.total_kib:
            raise ValueError("reserved_kib exceeds total_kib")
        return self


def _default_shares() -> Dict[GroupName, Decimal]:
    return {
        GroupName.URGENT: Decimal("0.40"),
        GroupName.NORMAL: Decimal("0.30"),
        GroupName.SERVICE: Decimal("0.20"),
        GroupName.BACKGROUND: Decimal("0.10"),
    }


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = Field(min_length=1)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    horizon_ticks: int = Field(default=DEFAULT_HORIZON_TICKS, ge=0)
    mode: Mode = Mode.BOTH
    weight_table: WeightTableKind = WeightTableKind.LINEAR
    group_shares: Dict[GroupName, Decimal] = Field(default_factory=_default_shares)
    address_space: AddressSpaceSpec = Field(default_factory=AddressSpaceSpec)
    zones: StackZoneConfig = Field(default_factory=StackZoneConfig)
    monitor_period: int = Field(default=100, ge=1)
    warmup_runs: int = Field(default=0, ge=0)
    max_lazy_delay: Optional[int] = Field(default=None, ge=1)
    fixed_stack_kib: int = Field(default=DEFAULT_STACK_KIB, ge=16, multiple_of=4)
    max_stack_kib: int = Field(default=MAX_STACK_KIB, ge=16, multiple_of=4)
    threads: List[ThreadSpec] = Field(default_factory=list)
    events: List[EventSpec] = Field(default_factory=list)

    @field_validator("group_shares")
    @classmethod
    def _positive_shares(cls, shares: Dict[GroupName, Decimal]) -> Dict[GroupName, Decimal]:
        merged = _default_shares()
        merged.update(shares)
        for name, share in merged.items():
            if share <= 0:
                raise ValueError(f"share of {name.value} must be positive")
        return merged

    @model_validator(mode="after")
    def _roles_resolve(self) -> "ScenarioConfig":
        roles = {t.role for t in self.threads if t.count}
        for index, event in enumerate(self.events):
            if event.role not in roles:
                raise PydanticCustomError(
                    "unknown_role", "unknown role reference '{role}'", {"role": event.role, "index": index}
                )
        return self

    def shares(self) -> Dict[GroupName, Fraction]:
        return {name: Fraction(share) for name, share in self.group_shares.items()}

    @property
    def thread_count(self) -> int:
        return sum(t.count for t in self.threads)

    def with_seed(self, seed: Optional[int]) -> "ScenarioConfig":
        if seed is None:
            return self
        if not 0 <= seed < 2 ** 64:
            raise ValidationError(
                f"seed {seed} outside [0, 2^64)",
                details={"errors": [{"field": "seed", "line": None, "message": "out of range"}]},
            )
        return self.model_copy(update={"seed": seed})
