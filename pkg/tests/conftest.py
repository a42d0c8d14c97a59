"""
Pytest configuration and shared fixtures.

Provides fixtures to:
1. Build small scenarios in memory
2. Locate the shipped scenario files
3. Create scheduler entities without a full simulation
"""
import logging
import sys
from fractions import Fraction
from pathlib import Path

import pytest

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from bench.config import ScenarioConfig
from bench.scenario import parse_scenario, parse_scenario_text
from scheduler.core import SchedulerState
from scheduler.models import Criticality, GroupName, NiceValue, SchedPolicy, ThreadState
from scheduler.weights import LINEAR

ROOT = Path(__file__).parent.parent
SCENARIO_DIR = ROOT / "scenarios"


class Entity:
    """Bare scheduling entity for scheduler-level tests."""

    def __init__(self, tid, group=GroupName.NORMAL, nice=0, criticality=Criticality.NON_TIME_CRITICAL,
                 policy=SchedPolicy.NORMAL):
        self.tid = tid
        self.group = group
        self.nice = NiceValue(nice)
        self.policy = policy
        self.criticality = criticality
        self.vruntime = Fraction(0)
        self.state = ThreadState.BLOCKED


@pytest.fixture
def make_entity():
    """Factory for scheduler entities."""
    return Entity


@pytest.fixture
def sched():
    """Empty scheduler with the linear weight table."""
    return SchedulerState(table=LINEAR)


@pytest.fixture
def scenario_dir():
    return SCENARIO_DIR


@pytest.fixture
def shipped():
    """Load a shipped scenario by file stem."""
    def load(name: str) -> ScenarioConfig:
        return parse_scenario(SCENARIO_DIR / f"{name}.scn")
    return load


@pytest.fixture
def scenario():
    """Parse scenario text."""
    def build(text: str) -> ScenarioConfig:
        return parse_scenario_text(text, source="test.scn")
    return build


@pytest.fixture(autouse=True)
def restore_tek_logger():
    """Undo setup_logging() so handlers and propagation don't leak between tests."""
    logger = logging.getLogger("tek")
    handlers, level, propagate = list(logger.handlers), logger.level, logger.propagate
    yield
    logger.handlers[:] = handlers
    logger.setLevel(level)
    logger.propagate = propagate
