"""
Role-keyed watermark history.

Recurring threads are recognised by role string, so advice recorded in one
run applies to the next allocation of that role, across runs.
"""
import logging
from typing import Dict, Iterable, Optional

from error_handling import ValidationError
from .models import (
    HIGH_ZONE_MESSAGE,
    LOW_ZONE_MESSAGE,
    MAX_STACK_KIB,
    MIN_STACK_KIB,
    SAFETY_FACTOR,
    Lifetime,
    RoleRecord,
    StackAdvice,
    StackZoneConfig,
    Zone,
    round_up_page,
)
from .zones import zone_of

logger = logging.getLogger("tek.stack_tuner")


class StackHistory:
    """Completed-lifetime watermarks per role."""

    def __init__(self, max_stack_kib: int = MAX_STACK_KIB, zone_config: Optional[StackZoneConfig] = None):
        self.max_stack_kib = max_stack_kib
        self.zone_config = zone_config or StackZoneConfig()
        self._roles: Dict[str, RoleRecord] = {}

    def __contains__(self, role: str) -> bool:
        return role in self._roles

    def __len__(self) -> int:
        return len(self._roles)

    def roles(self) -> Iterable[str]:
        return sorted(self._roles)

    def record_lifetime(self, role: str, peak_kib: int, reserved_kib: int, tid: int = 0) -> None:
        self._roles.setdefault(role, RoleRecord(role)).lifetimes.append(
            Lifetime(peak_kib=peak_kib, reserved_kib=reserved_kib, tid=tid)
        )

    def lifetimes(self, role: str):
        record = self._roles.get(role)
        return list(record.lifetimes) if record else []

    def advise(self, role: str) -> StackAdvice:
        """
        Advised reservation for the next thread of ``role``.

        advised = round_up_page(max peak * 1.5), clamped to
        [16 KiB, max_stack_kib]. The message reflects the zone of the
        lifetime that produced the maximum peak.

        Raises:
            ValidationError: No completed lifetime for the role ("no usage data")
        """
        record = self._roles.get(role)
        if record is None or not record.lifetimes:
            raise ValidationError("no usage data", details={"role": role})

        top = record.max_peak
        scaled = top.peak_kib * SAFETY_FACTOR
        advised = round_up_page(-(-scaled.numerator // scaled.denominator))
        advised = min(max(advised, MIN_STACK_KIB), self.max_stack_kib)

        zone = zone_of(top.peak_kib, top.reserved_kib, self.zone_config)
        message = None
        if zone is Zone.LOW:
            message = LOW_ZONE_MESSAGE
        elif zone is Zone.HIGH:
            message = HIGH_ZONE_MESSAGE
        if message:
            logger.info(message, extra={"role": role, "advised_kib": advised, "zone": zone.name})
        return StackAdvice(role=role, advised_kib=advised, zone=zone, message=message)
