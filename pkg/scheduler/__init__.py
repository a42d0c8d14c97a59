"""
Scheduler package: the fair-scheduling baseline and the SCHED_TEK CPU Mediator.

- ``weights``: nice-to-weight tables and exact CPU shares
- ``runqueue``: ordered (vruntime, tid) run queue
- ``core``: four-group scheduling, vruntime accounting, pick_next
- ``mediator``: Fast/Lazy Regions, migration and restoration
"""
from .models import (
    GROUP_ORDER,
    NICE_MAX,
    NICE_MIN,
    TICK_NS,
    Criticality,
    GroupName,
    NiceValue,
    SchedEntity,
    SchedParams,
    SchedPolicy,
    ThreadState,
)
from .weights import (
    GEOMETRIC,
    LINEAR,
    WeightTable,
    WeightTableKind,
    cpu_shares,
    geometric_weight,
    linear_weight,
    realized_shares,
    table_for,
    weight_of,
)
from .runqueue import ProbeStats, RunQueue
from .core import (
    DEFAULT_GROUP_SHARES,
    SchedGroup,
    SchedulerState,
    charge_vruntime,
    new_thread_vruntime,
)
from .mediator import (
    CPUMediator,
    MigrationEvent,
    MigrationReport,
    Region,
    RegionKind,
    RegionNode,
    RestorationReport,
)

__all__ = [
    'GROUP_ORDER', 'NICE_MAX', 'NICE_MIN', 'TICK_NS',
    'Criticality', 'GroupName', 'NiceValue', 'SchedEntity', 'SchedParams',
    'SchedPolicy', 'ThreadState',
    'GEOMETRIC', 'LINEAR', 'WeightTable', 'WeightTableKind', 'cpu_shares',
    'geometric_weight', 'linear_weight', 'realized_shares', 'table_for', 'weight_of',
    'ProbeStats', 'RunQueue',
    'DEFAULT_GROUP_SHARES', 'SchedGroup', 'SchedulerState', 'charge_vruntime',
    'new_thread_vruntime',
    'CPUMediator', 'MigrationEvent', 'MigrationReport', 'Region', 'RegionKind',
    'RegionNode', 'RestorationReport',
]
