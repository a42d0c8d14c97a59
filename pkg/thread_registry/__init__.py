"""
Enhanced Thread Identifier: the Thread Information Table, its 40-byte
record layout and the periodic Thread Monitor.
"""
from .record import (
    CSV_HEADER,
    RECORD_SIZE,
    ROLE_BYTES,
    ThreadInfoRecord,
    normalize_role,
    truncate_role,
)
from .rwlock import ReadWriteLock
from .table import ThreadInformationTable, write_csv
from .monitor import DEFAULT_MONITOR_PERIOD, SampleSource, ThreadMonitor, ThreadSample

__all__ = [
    'CSV_HEADER', 'RECORD_SIZE', 'ROLE_BYTES', 'ThreadInfoRecord', 'normalize_role',
    'truncate_role', 'ReadWriteLock', 'ThreadInformationTable', 'write_csv',
    'DEFAULT_MONITOR_PERIOD', 'SampleSource', 'ThreadMonitor', 'ThreadSample',
]
