from fractions import Fraction

from error_handling import ValidationError
from .models import StackAllocation, StackZoneConfig, Zone


def zone_of(peak_kib: int, reserved_kib: int, config: StackZoneConfig) -> Zone:
    ratio = Fraction(peak_kib, reserved_kib)
    if ratio < config.low:
        return Zone.LOW
    if ratio > config.high:
        return Zone.HIGH
    return Zone.NORMAL


def classify_zone(alloc: StackAllocation, config: StackZoneConfig = StackZoneConfig()) -> Zone:
    """
    Low if peak/reserved < low_frac, High if > high_frac, else Normal.

    Raises:
        ValidationError: The allocation has no usage samples ("no usage data")
    """
    if alloc.samples == 0:
        raise ValidationError("no usage data", details={"tid": alloc.tid})
    return zone_of(alloc.peak_used_kib, alloc.reserved_kib, config)
