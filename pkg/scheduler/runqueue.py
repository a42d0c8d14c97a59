"""
Ordered run queue keyed by (vruntime, tid).

Backed by ``sortedcontainers.SortedKeyList`` (a balanced ordered structure
with O(log n) insert/remove/min). With ``instrumented=True`` every key
comparison is counted so the logarithmic bound can be asserted in tests.
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, Optional, Tuple

from sortedcontainers import SortedKeyList

from error_handling import AlreadyExistsError, NotFoundError


@dataclass
class ProbeStats:
    comparisons: int = 0
    operations: int = 0


class _CountingKey:
    """(vruntime, tid) key that counts comparisons against a shared counter."""
    __slots__ = ("vruntime", "tid", "stats")

    def __init__(self, vruntime: Fraction, tid: int, stats: ProbeStats):
        self.vruntime = vruntime
        self.tid = tid
        self.stats = stats

    def _pair(self):
        return (self.vruntime, self.tid)

    def __lt__(self, other: "_CountingKey") -> bool:
        self.stats.comparisons += 1
        return self._pair() < other._pair()

    def __gt__(self, other: "_CountingKey") -> bool:
        self.stats.comparisons += 1
        return self._pair() > other._pair()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, _CountingKey):
            return NotImplemented
        self.stats.comparisons += 1
        return self._pair() == other._pair()

    def __le__(self, other: "_CountingKey") -> bool:
        return not other < self

    def __ge__(self, other: "_CountingKey") -> bool:
        return not self < other

    __hash__ = None


class RunQueue:
    """Set of (vruntime, tid) entries with at most one entry per tid."""

    def __init__(self, instrumented: bool = False):
        self.stats = ProbeStats()
        self._instrumented = instrumented
        self._entries = SortedKeyList(key=self._key)
        self._vruntime: Dict[int, Fraction] = {}

    def _key(self, entry: Tuple[Fraction, int]):
        if self._instrumented:
            return _CountingKey(entry[0], entry[1], self.stats)
        return entry

    def __len__(self) -> int:
        return len(self._vruntime)

    def __bool__(self) -> bool:
        return bool(self._vruntime)

    def __contains__(self, tid: int) -> bool:
        return tid in self._vruntime

    def __iter__(self) -> Iterator[Tuple[Fraction, int]]:
        """Entries in ascending (vruntime, tid) order."""
        return iter(self._entries)

    def insert(self, tid: int, vruntime: Fraction) -> None:
        if tid in self._vruntime:
            raise AlreadyExistsError("thread", tid, f"tid {tid} already queued")
        self.stats.operations += 1
        self._vruntime[tid] = vruntime
        self._entries.add((vruntime, tid))

    def remove(self, tid: int) -> Fraction:
        vruntime = self._vruntime.pop(tid, None)
        if vruntime is None:
            raise NotFoundError("thread", tid, f"tid {tid} not queued")
        self.stats.operations += 1
        self._entries.remove((vruntime, tid))
        return vruntime

    def peek_min(self) -> Optional[Tuple[Fraction, int]]:
        if not self._entries:
            return None
        self.stats.operations += 1
        return self._entries[0]

    def pop_min(self) -> Optional[Tuple[Fraction, int]]:
        if not self._entries:
            return None
        self.stats.operations += 1
        vruntime, tid = self._entries.pop(0)
        del self._vruntime[tid]
        return vruntime, tid

    def min_vruntime(self) -> Optional[Fraction]:
        head = self.peek_min()
        return None if head is None else head[0]

    def vruntime_of(self, tid: int) -> Fraction:
        return self._vruntime[tid]

    def tids(self) -> Tuple[int, ...]:
        return tuple(tid for _, tid in self._entries)
