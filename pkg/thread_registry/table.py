"""
Thread Information Table.

Holds one 40-byte record per thread, keyed by tid, with a role index for
lookups such as "every gas detection thread". Reads run concurrently;
mutations take the table exclusively.
"""
import csv
import logging
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Set, Union

from error_handling import (
    AlreadyExistsError,
    InvalidStateError,
    InvariantViolation,
    NotFoundError,
    ValidationError,
)
from scheduler.models import Criticality, NiceValue, SchedParams, SchedPolicy
from .record import COUNT, CSV_HEADER, RECORD_SIZE, ThreadInfoRecord, normalize_role
from .rwlock import ReadWriteLock

logger = logging.getLogger("tek.registry")

# Called with (tid, SchedParams) before a policy/priority change is committed
SchedParamHook = Callable[[int, SchedParams], Any]
CriticalityHook = Callable[[int, Criticality], Any]


class ThreadInformationTable:
    """
    Args:
        on_sched_param: Receives policy/priority changes (the kernel wires
            this to the CPU Mediator's set_sched_param)
        on_criticality: Receives the first criticality assignment
    """

    def __init__(
        self,
        on_sched_param: Optional[SchedParamHook] = None,
        on_criticality: Optional[CriticalityHook] = None,
    ):
        self._records: Dict[int, ThreadInfoRecord] = {}
        self._role_index: Dict[str, Set[int]] = {}
        self._frozen: Set[int] = set()
        self._lock = ReadWriteLock()
        self.on_sched_param = on_sched_param
        self.on_criticality = on_criticality

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, tid: int) -> bool:
        return tid in self._records

    # -- internal -------------------------------------------------------------

    def _index(self, record: ThreadInfoRecord) -> None:
        self._role_index.setdefault(record.role, set()).add(record.tid)

    def _unindex(self, record: ThreadInfoRecord) -> None:
        tids = self._role_index.get(record.role)
        if tids is not None:
            tids.discard(record.tid)
            if not tids:
                del self._role_index[record.role]

    def _store(self, record: ThreadInfoRecord) -> None:
        previous = self._records.get(record.tid)
        if previous is not None and previous.role != record.role:
            self._unindex(previous)
        self._records[record.tid] = record
        self._index(record)

    def _live(self, tid: int) -> ThreadInfoRecord:
        record = self._records.get(tid)
        if record is None or tid in self._frozen:
            raise NotFoundError("thread", tid, "no such thread")
        return record

    # -- operations -------------------------------------------------------------

    def register_thread(
        self,
        tid: int,
        now_ns: int = 0,
        role: str = "",
        policy: SchedPolicy = SchedPolicy.NORMAL,
        priority: int = 0,
        criticality: Criticality = Criticality.UNSET,
        stack_kib: int = 0,
        vm_kib: int = 0,
    ) -> ThreadInfoRecord:
        """
        Create the record for a new thread, stamped with the current time.

        Raises:
            AlreadyExistsError: ``tid`` is already registered ("thread exists")
        """
        record = ThreadInfoRecord(
            tid=tid,
            policy=policy,
            priority=int(priority),
            criticality=criticality,
            creation_ns=now_ns,
            stack_kib=stack_kib,
            vm_kib=vm_kib,
            role=role,
        )
        with self._lock.write():
            if tid in self._records:
                raise AlreadyExistsError("thread", tid, "thread exists")
            self._store(record)
        logger.debug("thread registered", extra={"tid": tid, "role": record.role})
        return record

    def set_attributes(
        self,
        tid: int,
        role: Optional[str] = None,
        criticality: Optional[Criticality] = None,
        policy: Optional[SchedPolicy] = None,
        priority: Optional[int] = None,
    ) -> ThreadInfoRecord:
        """
        Update the named attributes of a live thread.

        Criticality can be assigned once. SCHED_TEK without time-critical
        criticality is rejected before any hook runs. Policy and priority
        changes are forwarded to ``on_sched_param``; if it rejects them the
        role and policy are not written, and only a criticality already
        delivered to ``on_criticality`` is kept.

        Raises:
            NotFoundError: Unknown or terminated tid ("no such thread")
            InvalidStateError: Criticality already assigned ("criticality immutable")
            ValidationError: Criticality reset to UNSET, out-of-range priority
                or SCHED_TEK on a thread that is not time-critical
                ("criticality mismatch")
        """
        with self._lock.write():
            record = self._live(tid)
            changes: Dict[str, Any] = {}

            if criticality is not None:
                criticality = Criticality(criticality)
                if record.criticality is not Criticality.UNSET:
                    raise InvalidStateError("criticality immutable", details={"tid": tid})
                if criticality is Criticality.UNSET:
                    raise ValidationError("criticality cannot be reset to unset", details={"tid": tid})
                changes["criticality"] = criticality

            if role is not None:
                changes["role"] = role

            if policy is not None or priority is not None:
                params = SchedParams.of(
                    record.policy if policy is None else policy,
                    record.priority if priority is None else priority,
                )
                changes["policy"] = params.policy
                changes["priority"] = params.priority.value

            resulting = changes.get("criticality", record.criticality)
            if changes.get("policy") is SchedPolicy.TEK and resulting is not Criticality.TIME_CRITICAL:
                raise ValidationError("criticality mismatch", details={"tid": tid})

            if "criticality" in changes and self.on_criticality:
                self.on_criticality(tid, changes["criticality"])
            if "policy" in changes and self.on_sched_param:
                try:
                    self.on_sched_param(tid, SchedParams(changes["policy"], NiceValue(changes["priority"])))
                except Exception:
                    # the thread already holds the new criticality
                    if "criticality" in changes:
                        self._store(record.with_changes(criticality=changes["criticality"]))
                    raise

            updated = record.with_changes(**changes)
            self._store(updated)
        return updated

    def get_attributes(self, tid: int) -> ThreadInfoRecord:
        """
        Snapshot of a thread's record; terminated threads keep their final record.

        Raises:
            NotFoundError: Unknown tid ("no such thread")
        """
        with self._lock.read():
            record = self._records.get(tid)
        if record is None:
            raise NotFoundError("thread", tid, "no such thread")
        return record

    def lookup_by_role(self, role: str) -> List[int]:
        """Tids whose role matches ``role`` after the same 12-byte truncation."""
        key = normalize_role(role)
        with self._lock.read():
            return sorted(self._role_index.get(key, ()))

    def refresh(self, tid: int, **fields) -> bool:
        """Monitor update; returns False for unknown or frozen records."""
        with self._lock.write():
            record = self._records.get(tid)
            if record is None or tid in self._frozen:
                return False
            self._store(record.with_changes(**fields))
        return True

    def freeze(self, tid: int) -> None:
        """Keep a terminated thread's final record; it no longer accepts updates."""
        with self._lock.write():
            if tid not in self._records:
                raise NotFoundError("thread", tid, "no such thread")
            self._frozen.add(tid)

    def is_frozen(self, tid: int) -> bool:
        return tid in self._frozen

    def records(self) -> List[ThreadInfoRecord]:
        with self._lock.read():
            return [self._records[tid] for tid in sorted(self._records)]

    # -- consistency ------------------------------------------------------------

    def rebuild_role_index(self) -> Dict[str, Set[int]]:
        index: Dict[str, Set[int]] = {}
        for record in self._records.values():
            index.setdefault(record.role, set()).add(record.tid)
        return index

    def check_index(self) -> None:
        with self._lock.read():
            if self.rebuild_role_index() != self._role_index:
                raise InvariantViolation("role_index", "role index out of sync with records")

    # -- dumps ------------------------------------------------------------------

    @property
    def footprint_bytes(self) -> int:
        return RECORD_SIZE * len(self._records)

    def serialize(self) -> bytes:
        """8-byte little-endian count followed by the records in tid order."""
        records = self.records()
        return COUNT.pack(len(records)) + b"".join(r.serialize() for r in records)

    @classmethod
    def deserialize(cls, data: bytes) -> "ThreadInformationTable":
        if len(data) < COUNT.size:
            raise ValidationError("table dump too short")
        (count,) = COUNT.unpack_from(data)
        payload = data[COUNT.size:]
        if len(payload) != count * RECORD_SIZE:
            raise ValidationError(
                f"table dump holds {len(payload)} payload bytes, expected {count * RECORD_SIZE}",
                details={"count": count},
            )
        table = cls()
        for _ in range(count):
            record, payload = ThreadInfoRecord.deserialize(payload)
            if record.tid in table._records:
                raise ValidationError(f"duplicate tid {record.tid} in table dump")
            table._store(record)
        return table

    @classmethod
    def from_records(cls, records: Iterable[ThreadInfoRecord]) -> "ThreadInformationTable":
        table = cls()
        for record in records:
            if record.tid in table._records:
                raise AlreadyExistsError("thread", record.tid, "thread exists")
            table._store(record)
        return table

    def dump_binary(self, path: Union[str, Path]) -> int:
        data = self.serialize()
        Path(path).write_bytes(data)
        return len(data)

    @classmethod
    def load_binary(cls, path: Union[str, Path]) -> "ThreadInformationTable":
        return cls.deserialize(Path(path).read_bytes())

    def dump_csv(self, path: Union[str, Path]) -> None:
        write_csv(path, self.records())


def write_csv(path: Union[str, Path], records: Iterable[ThreadInfoRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for record in records:
            writer.writerow(record.as_row())
