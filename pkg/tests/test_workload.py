"""
Tests for the PRNG streams and workload generation.
"""
import pytest

from bench.config import Mode, PhaseKind
from simulation import FIRST_TID, Simulation, XorShift64Star, build_workload, demand_trace, splitmix64
from simulation.prng import MASK64

HANDLERS = """
[scenario]
name = handlers
seed = 11
horizon_ticks = 5000

[thread]
count = 3
group = urgent
policy = tek
criticality = tc
role = handler
behavior = await, compute:5-15
loop = true

[thread]
count = 2
role = hog
behavior = compute:10-40, block:1-3
loop = true
arrival = 2
arrival_step = 3
stack_peak_kib = 100-200

[event]
role = handler
start = 100
period = 400
stagger = 50
jitter = 30
"""


@pytest.mark.unit
class TestPrng:
    def test_splitmix64_reference_value(self):
        assert splitmix64(0) == 0xE220A8397B1DCDAF

    def test_same_seed_same_stream(self):
        a, b = XorShift64Star(42), XorShift64Star(42)
        assert [a.next_u64() for _ in range(50)] == [b.next_u64() for _ in range(50)]

    def test_outputs_are_64_bit(self):
        rng = XorShift64Star(1)
        assert all(0 <= rng.next_u64() <= MASK64 for _ in range(1000))

    def test_derived_streams_are_independent(self):
        behavior = XorShift64Star.derive(7, 1, 1)
        stack = XorShift64Star.derive(7, 2, 1)
        assert behavior.next_u64() != stack.next_u64()
        assert XorShift64Star.derive(7, 1, 1).state == XorShift64Star.derive(7, 1, 1).state

    def test_randint_bounds(self):
        rng = XorShift64Star(3)
        draws = [rng.randint(5, 9) for _ in range(2000)]
        assert set(draws) == {5, 6, 7, 8, 9}

    def test_degenerate_range(self):
        rng = XorShift64Star(3)
        state = rng.state
        assert rng.randint(4, 4) == 4
        assert rng.state == state


@pytest.mark.unit
class TestDemandTrace:
    def test_ramp(self):
        assert demand_trace(240) == [(0, 60), (1, 120), (2, 240)]

    def test_small_peak(self):
        assert demand_trace(3) == [(0, 1), (1, 1), (2, 3)]

    def test_no_peak(self):
        assert demand_trace(0) == []


@pytest.mark.unit
class TestBuildWorkload:
    def test_tids_and_arrivals(self, scenario):
        workload = build_workload(scenario(HANDLERS))
        assert [t.tid for t in workload.threads] == list(range(FIRST_TID, FIRST_TID + 5))
        assert [t.ordinal for t in workload.threads] == [1, 2, 3, 4, 5]
        assert [t.arrival_tick for t in workload.threads] == [0, 0, 0, 2, 5]
        assert workload.by_role() == {"handler": [1000, 1001, 1002], "hog": [1003, 1004]}

    def test_stack_peaks_drawn_in_range(self, scenario):
        workload = build_workload(scenario(HANDLERS))
        for thread in workload.threads:
            if thread.role == "hog":
                peak = thread.stack_demand_trace[-1][1]
                assert 100 <= peak <= 200
            else:
                assert thread.stack_demand_trace == []

    def test_events_follow_plan(self, scenario):
        config = scenario(HANDLERS)
        events = build_workload(config).events
        assert [e.event_id for e in events] == list(range(len(events)))
        assert [e.arrival_tick for e in events] == sorted(e.arrival_tick for e in events)

        for k, tid in enumerate((1000, 1001, 1002)):
            ticks = [e.arrival_tick for e in events if e.target_tid == tid]
            assert len(ticks) == len(range(100 + k * 50, 5000, 400))
            for i, tick in enumerate(ticks):
                base = 100 + k * 50 + i * 400
                assert base <= tick <= base + 30

    def test_event_count_limit(self, scenario):
        config = scenario(HANDLERS.replace("jitter = 30", "jitter = 30\ncount = 2"))
        assert len(build_workload(config).events) == 6

    def test_deterministic(self, scenario):
        config = scenario(HANDLERS)
        first, second = build_workload(config), build_workload(config)
        assert [(e.target_tid, e.arrival_tick) for e in first.events] == \
            [(e.target_tid, e.arrival_tick) for e in second.events]
        assert [t.next_phase() for t in first.threads] == [t.next_phase() for t in second.threads]

    def test_seed_changes_draws(self, scenario):
        config = scenario(HANDLERS)
        other = config.with_seed(12)
        assert [e.arrival_tick for e in build_workload(config).events] != \
            [e.arrival_tick for e in build_workload(other).events]

    def test_modes_share_the_workload(self, scenario):
        config = scenario(HANDLERS)
        baseline = Simulation(config, Mode.BASELINE)
        tek = Simulation(config, Mode.TEK)
        assert [(e.target_tid, e.arrival_tick) for e in baseline.events] == \
            [(e.target_tid, e.arrival_tick) for e in tek.events]
        assert [t.stack_demand_trace for t in baseline.threads.values()] == \
            [t.stack_demand_trace for t in tek.threads.values()]


@pytest.mark.unit
class TestPhases:
    def test_non_looping_behavior_exits(self, scenario):
        config = scenario("[scenario]\nname = x\n\n[thread]\nbehavior = compute:4\n")
        thread = build_workload(config).threads[0]
        assert thread.next_phase() == (PhaseKind.COMPUTE, 4)
        assert thread.next_phase() == (PhaseKind.EXIT, 0)

    def test_looping_behavior_wraps(self, scenario):
        config = scenario("[scenario]\nname = x\n\n[thread]\nbehavior = compute:2, block:3\nloop = true\n")
        thread = build_workload(config).threads[0]
        phases = [thread.next_phase() for _ in range(4)]
        assert phases == [(PhaseKind.COMPUTE, 2), (PhaseKind.BLOCK, 3)] * 2
