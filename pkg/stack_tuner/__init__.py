"""
Stack Tuner: stack reservations over a modeled 32-bit address space, peak
usage watermarks, Low/Normal/High zones and role-keyed size advice.
"""
from .models import (
    DEFAULT_RESERVED_BYTES,
    DEFAULT_STACK_KIB,
    DEFAULT_TOTAL_USER_BYTES,
    GUARD_KIB,
    HIGH_ZONE_MESSAGE,
    LOW_ZONE_MESSAGE,
    MAX_STACK_KIB,
    MIN_STACK_KIB,
    PAGE_KIB,
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
from .zones import classify_zone, zone_of
from .history import StackHistory
from .address_space import AddressSpaceModel

__all__ = [
    'DEFAULT_RESERVED_BYTES', 'DEFAULT_STACK_KIB', 'DEFAULT_TOTAL_USER_BYTES', 'GUARD_KIB',
    'HIGH_ZONE_MESSAGE', 'LOW_ZONE_MESSAGE', 'MAX_STACK_KIB', 'MIN_STACK_KIB', 'PAGE_KIB',
    'FaultEvent', 'FaultKind', 'SpaceReport', 'StackAdvice', 'StackAllocation', 'StackPolicy',
    'StackZoneConfig', 'Zone', 'round_up_page',
    'classify_zone', 'zone_of',
    'StackHistory',
    'AddressSpaceModel',
]
