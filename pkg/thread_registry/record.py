"""
Thread Information Table record: 40 bytes, little-endian.

    offset size field
    0      4    tid               u32
    4      1    policy            u8   (0 normal, 7 tek)
    5      1    priority          i8   (nice)
    6      1    criticality       u8   (0 unset, 1 time-critical, 2 non-time-critical)
    7      1    zone              u8   (0 unknown, 1 low, 2 normal, 3 high)
    8      8    creation_ns       u64
    16     4    stack_kib         u32
    20     4    vm_kib            u32
    24     4    peak_kib          u32
    28     12   role              UTF-8, zero padded
"""
import struct
from dataclasses import dataclass, replace
from typing import Tuple

from error_handling import ValidationError
from scheduler.models import NICE_MAX, NICE_MIN, Criticality, SchedPolicy
from stack_tuner.models import Zone

RECORD = struct.Struct("<IBbBBQIII12s")
RECORD_SIZE = RECORD.size
ROLE_BYTES = 12
COUNT = struct.Struct("<Q")

assert RECORD_SIZE == 40


def truncate_role(role: str) -> bytes:
    """UTF-8 encode ``role`` and cut it to 12 bytes without splitting a character."""
    if "\x00" in role:
        raise ValidationError("role must not contain NUL", details={"field": "role"})
    raw = role.encode("utf-8")
    if len(raw) <= ROLE_BYTES:
        return raw
    return raw[:ROLE_BYTES].decode("utf-8", "ignore").encode("utf-8")


def normalize_role(role: str) -> str:
    return truncate_role(role).decode("utf-8")


@dataclass(frozen=True)
class ThreadInfoRecord:
    tid: int
    policy: SchedPolicy = SchedPolicy.NORMAL
    priority: int = 0
    criticality: Criticality = Criticality.UNSET
    zone: Zone = Zone.UNKNOWN
    creation_ns: int = 0
    stack_kib: int = 0
    vm_kib: int = 0
    peak_kib: int = 0
    role: str = ""

    def __post_init__(self):
        if not 0 <= self.tid < 2 ** 32:
            raise ValidationError(f"tid {self.tid} does not fit in 32 bits", details={"field": "tid"})
        if not NICE_MIN <= self.priority <= NICE_MAX:
            raise ValidationError(f"priority {self.priority} outside nice range", details={"field": "priority"})
        for name in ("stack_kib", "vm_kib", "peak_kib"):
            if not 0 <= getattr(self, name) < 2 ** 32:
                raise ValidationError(f"{name} does not fit in 32 bits", details={"field": name})
        if not 0 <= self.creation_ns < 2 ** 64:
            raise ValidationError("creation_ns does not fit in 64 bits", details={"field": "creation_ns"})
        object.__setattr__(self, "policy", SchedPolicy(self.policy))
        object.__setattr__(self, "criticality", Criticality(self.criticality))
        object.__setattr__(self, "zone", Zone(self.zone))
        object.__setattr__(self, "role", normalize_role(self.role))

    def serialize(self) -> bytes:
        return RECORD.pack(
            self.tid,
            int(self.policy),
            self.priority,
            int(self.criticality),
            int(self.zone),
            self.creation_ns,
            self.stack_kib,
            self.vm_kib,
            self.peak_kib,
            truncate_role(self.role),
        )

    @classmethod
    def deserialize(cls, data: bytes) -> Tuple["ThreadInfoRecord", bytes]:
        """Decode one record from the front of ``data``; returns it with the rest."""
        if len(data) < RECORD_SIZE:
            raise ValidationError(
                f"truncated record: {len(data)} bytes",
                details={"expected": RECORD_SIZE},
            )
        fields = RECORD.unpack_from(data)
        try:
            record = cls(
                tid=fields[0],
                policy=SchedPolicy(fields[1]),
                priority=fields[2],
                criticality=Criticality(fields[3]),
                zone=Zone(fields[4]),
                creation_ns=fields[5],
                stack_kib=fields[6],
                vm_kib=fields[7],
                peak_kib=fields[8],
                role=fields[9].rstrip(b"\x00").decode("utf-8"),
            )
        except (ValueError, UnicodeDecodeError) as exc:
            raise ValidationError(f"malformed record: {exc}") from exc
        return record, data[RECORD_SIZE:]

    def with_changes(self, **changes) -> "ThreadInfoRecord":
        return replace(self, **changes)

    def as_row(self):
        """CSV row in header order."""
        return [
            self.tid,
            int(self.policy),
            self.priority,
            int(self.criticality),
            int(self.zone),
            self.creation_ns,
            self.stack_kib,
            self.vm_kib,
            self.peak_kib,
            self.role,
        ]


CSV_HEADER = ["tid", "policy", "priority", "criticality", "zone", "creation_ns",
              "stack_kib", "vm_kib", "peak_kib", "role"]
