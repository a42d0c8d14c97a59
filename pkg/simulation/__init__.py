"""
Deterministic simulation of one-to-one threads on a single CPU.
"""
from .prng import XorShift64Star, splitmix64
from .thread import SimThread, UserEvent
from .workload import FIRST_TID, Workload, build_workload, demand_trace
from .metrics import FaultRecord, MetricsReport, MigrationRecord, SpaceSummary, ThreadMetrics, fixed
from .kernel import Simulation, inject_event, run_modes, run_scenario, step

__all__ = [
    'XorShift64Star', 'splitmix64',
    'SimThread', 'UserEvent',
    'FIRST_TID', 'Workload', 'build_workload', 'demand_trace',
    'FaultRecord', 'MetricsReport', 'MigrationRecord', 'SpaceSummary', 'ThreadMetrics', 'fixed',
    'Simulation', 'inject_event', 'run_modes', 'run_scenario', 'step',
]
