"""
Nice-to-weight tables and CPU share computation.

Two 40-entry tables are provided:

- ``LINEAR``: weight(n) = 275 - 10n. Four threads at nice 1..4 get
  exactly 26.5%, 25.5%, 24.5% and 23.5% of the CPU. It is the default.
- ``GEOMETRIC``: weight(n) = round(1024 * 1.25^-n), the shape of the real
  CFS table (each nice step is ~10% CPU). Regenerate with
  ``scripts/generate_weight_table.py``.
"""
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, List, Sequence, Tuple

from error_handling import ValidationError
from .models import NiceValue, NICE_MIN, NICE_MAX


class WeightTableKind(str, Enum):
    LINEAR = "linear"
    GEOMETRIC = "geometric"


# nice -20 .. 19
GEOMETRIC_WEIGHTS = (
    88818, 71054, 56843, 45475, 36380,  # -20 .. -16
    29104, 23283, 18626, 14901, 11921,  # -15 .. -11
    9537, 7629, 6104, 4883, 3906,       # -10 .. -6
    3125, 2500, 2000, 1600, 1280,       # -5 .. -1
    1024, 819, 655, 524, 419,           # 0 .. 4
    336, 268, 215, 172, 137,            # 5 .. 9
    110, 88, 70, 56, 45,                # 10 .. 14
    36, 29, 23, 18, 15,                 # 15 .. 19
)


def linear_weight(nice: int) -> Fraction:
    return Fraction(275 - 10 * nice)


def geometric_weight(nice: int) -> Fraction:
    """Nearest integer to 1024 * 1.25^-nice, computed exactly (no ties occur)."""
    exact = 1024 * Fraction(4, 5) ** nice
    return Fraction(math.floor(exact + Fraction(1, 2)))


@dataclass(frozen=True)
class WeightTable:
    kind: WeightTableKind
    weights: Tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.weights) != 40:
            raise ValidationError(
                f"weight table must have 40 entries, got {len(self.weights)}",
                details={"kind": self.kind.value},
            )
        if any(w <= 0 for w in self.weights):
            raise ValidationError("weights must be strictly positive", details={"kind": self.kind.value})
        if any(a <= b for a, b in zip(self.weights, self.weights[1:])):
            raise ValidationError("weights must strictly decrease with nice", details={"kind": self.kind.value})

    @classmethod
    def build(cls, kind: WeightTableKind) -> "WeightTable":
        kind = WeightTableKind(kind)
        if kind is WeightTableKind.LINEAR:
            weights = tuple(linear_weight(n) for n in range(NICE_MIN, NICE_MAX + 1))
        else:
            weights = tuple(Fraction(w) for w in GEOMETRIC_WEIGHTS)
        return cls(kind=kind, weights=weights)

    @property
    def nice0(self) -> Fraction:
        return self.weights[20]


LINEAR = WeightTable.build(WeightTableKind.LINEAR)
GEOMETRIC = WeightTable.build(WeightTableKind.GEOMETRIC)


def table_for(kind) -> WeightTable:
    return LINEAR if WeightTableKind(kind) is WeightTableKind.LINEAR else GEOMETRIC


def weight_of(nice: NiceValue, table: WeightTable = LINEAR) -> Fraction:
    """Weight of a nice value: ``table.weights[nice + 20]``."""
    if not isinstance(nice, NiceValue):
        nice = NiceValue(nice)
    return table.weights[nice.index]


def cpu_shares(
    threads: Sequence[Tuple[int, NiceValue]],
    table: WeightTable = LINEAR,
) -> List[Tuple[int, Fraction]]:
    """
    Exact CPU share of each thread: weight_i / sum(weights).

    Args:
        threads: (tid, nice) pairs
        table: Weight table to apply

    Returns:
        (tid, share) pairs in input order; shares sum to exactly 1

    Raises:
        ValidationError: If the list is empty
    """
    if not threads:
        raise ValidationError("no runnable threads")
    weights = [(tid, weight_of(nice, table)) for tid, nice in threads]
    total = sum(w for _, w in weights)
    return [(tid, w / total) for tid, w in weights]


def realized_shares(cpu_ticks: Iterable[Tuple[int, int]]) -> List[Tuple[int, Fraction]]:
    """Observed share of each tid from consumed tick counts."""
    cpu_ticks = list(cpu_ticks)
    total = sum(t for _, t in cpu_ticks)
    if total == 0:
        return [(tid, Fraction(0)) for tid, _ in cpu_ticks]
    return [(tid, Fraction(t, total)) for tid, t in cpu_ticks]
