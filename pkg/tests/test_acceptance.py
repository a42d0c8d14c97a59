"""
End-to-end checks on the shipped scenarios: CPU shares, response time,
preemptions, the strict-delay property, stack arithmetic, fault onset, table
layout and reproducibility.
"""
from fractions import Fraction

import pytest

from bench.commands import compare_modes
from bench.config import AddressSpaceSpec, Mode, ScenarioConfig
from scheduler.models import GroupName, NiceValue, SchedPolicy
from scheduler.weights import LINEAR, cpu_shares
from simulation import Simulation, XorShift64Star, build_workload, run_scenario
from tek_bench import main
from thread_registry import ThreadInfoRecord, ThreadInformationTable

SHIPPED = ["contention", "ctxswitch", "shares", "stackgrowth"]

_compared = {}


@pytest.fixture
def compared(shipped):
    """Baseline and TEK reports per shipped scenario, computed once per session."""
    def run(name):
        if name not in _compared:
            _compared[name] = compare_modes(shipped(name))
        return _compared[name]
    return run


@pytest.mark.unit
def test_linear_shares_for_nice_one_to_four():
    shares = cpu_shares([(n, NiceValue(n)) for n in (1, 2, 3, 4)], LINEAR)
    assert [share for _, share in shares] == [
        Fraction(265, 1000), Fraction(255, 1000), Fraction(245, 1000), Fraction(235, 1000),
    ]


@pytest.mark.slow
def test_long_run_shares_match_weights(shipped):
    config = shipped("shares")
    report = run_scenario(config, Mode.BASELINE)
    assert report.elapsed_ticks == 100_000

    expected = dict(cpu_shares([(t.tid, NiceValue(t.nice)) for t in report.threads], LINEAR))
    for tid, realized in report.realized_shares():
        assert abs(realized - expected[tid]) <= Fraction(5, 1000)


@pytest.mark.slow
def test_time_critical_response_improves(compared):
    reports = compared("contention")
    baseline, tek = reports[Mode.BASELINE], reports[Mode.TEK]

    assert tek.response_times("tc")
    assert baseline.mean_response("tc") >= 5 * tek.mean_response("tc")
    assert tek.response_cv("tc") < baseline.response_cv("tc")
    assert tek.switches("tc") <= Fraction(3, 4) * baseline.switches("tc")


@pytest.mark.slow
def test_time_critical_preemptions_reduced(compared):
    reports = compared("ctxswitch")
    baseline, tek = reports[Mode.BASELINE], reports[Mode.TEK]
    assert baseline.preemptions("tc") > 0
    assert tek.preemptions("tc") <= Fraction(3, 4) * baseline.preemptions("tc")


@pytest.mark.slow
@pytest.mark.parametrize("name", SHIPPED)
def test_preemptions_never_increase(compared, name):
    reports = compared(name)
    assert reports[Mode.TEK].preemptions("tc") <= reports[Mode.BASELINE].preemptions("tc")


def random_scenario(seed: int) -> ScenarioConfig:
    rng = XorShift64Star(seed)
    groups = list(GroupName)
    threads = []
    for index in range(rng.randint(2, 6)):
        time_critical = rng.randint(0, 2) == 0
        threads.append({
            "count": rng.randint(1, 3),
            "group": groups[rng.randint(0, 3)],
            "nice": rng.randint(-5, 5),
            "policy": "tek" if time_critical else "normal",
            "criticality": "tc" if time_critical else "ntc",
            "role": f"r{index}",
            "behavior": "await, compute:2-12" if time_critical else "compute:3-30, block:1-6",
            "loop": True,
        })
    events = [
        {"role": t["role"], "start": rng.randint(0, 20), "period": rng.randint(15, 60), "jitter": rng.randint(0, 5)}
        for t in threads if t["criticality"] == "tc"
    ]
    return ScenarioConfig.model_validate({
        "name": f"random{seed}",
        "seed": seed,
        "horizon_ticks": 300,
        "mode": "tek",
        "threads": threads,
        "events": events,
    })


@pytest.mark.slow
def test_strict_delay_and_exact_restoration():
    for seed in range(100):
        config = random_scenario(seed)
        defined = {t.tid: t for t in build_workload(config).threads}
        sim = Simulation(config, Mode.TEK, check_invariants=True)
        sim.run()
        assert sim.strict_delay_violations == 0

        lazy = set(sim.mediator.lazy.tids())
        for tid, thread in sim.threads.items():
            if tid in lazy:
                continue
            expected_policy = defined[tid].requested_policy if thread.arrived else SchedPolicy.NORMAL
            assert (thread.group, thread.policy, thread.nice) == \
                (defined[tid].group, expected_policy, defined[tid].nice)
            if thread.state.schedulable and sim.mediator.location(tid) is None:
                assert tid in sim.sched.groups[thread.group].queue


@pytest.mark.slow
def test_fixed_size_stack_arithmetic(shipped):
    config = shipped("stackgrowth").model_copy(update={"address_space": AddressSpaceSpec()})
    report = run_scenario(config, Mode.BASELINE)
    assert len(report.threads) == 273
    assert report.space.allocated_kib == 2_236_416
    assert report.first_exhaustion_ordinal is None


@pytest.mark.slow
def test_tuned_stacks_bounded_by_actual_use(shipped):
    report = run_scenario(shipped("stackgrowth"), Mode.TEK)
    space = report.space
    assert report.fault_count("allocation_exhaustion") == 0
    assert report.fault_count("guard_page_overrun") == 0
    assert space.allocated_kib < 2_236_416
    assert space.allocated_kib <= 2 * space.actual_peak_kib


@pytest.mark.slow
def test_fault_onset_default_space(scenario):
    config = scenario(
        "[scenario]\nname = onset\nhorizon_ticks = 5\nmode = baseline\n\n"
        "[thread]\ncount = 330\nrole = w\nbehavior = compute:1, block:1000\n"
    )
    report = run_scenario(config)
    assert report.first_exhaustion_ordinal == 320
    assert report.fault_count("allocation_exhaustion") == 11


@pytest.mark.slow
def test_fault_onset_raised_reservation(compared):
    reports = compared("stackgrowth")
    assert reports[Mode.BASELINE].first_exhaustion_ordinal == 200
    assert reports[Mode.TEK].fault_count("allocation_exhaustion") == 0


@pytest.mark.unit
def test_table_of_300_threads_is_12000_bytes():
    table = ThreadInformationTable()
    for tid in range(300):
        table.register_thread(tid, now_ns=tid, role=f"role{tid % 7}")
    data = table.serialize()
    assert len(data) - 8 == 12_000
    assert ThreadInformationTable.deserialize(data).records() == table.records()

    rng = XorShift64Star(2024)
    for tid in range(10_000):
        record = ThreadInfoRecord(tid=tid, priority=rng.randint(-20, 19), creation_ns=rng.next_u64(),
                                  stack_kib=rng.randint(0, 8192), peak_kib=rng.randint(0, 8192))
        assert ThreadInfoRecord.deserialize(record.serialize())[0] == record


@pytest.mark.slow
def test_compare_outputs_are_byte_identical(scenario_dir, tmp_path):
    runs = [tmp_path / "first", tmp_path / "second"]
    for out in runs:
        assert main(["compare", str(scenario_dir / "ctxswitch.scn"), "--out", str(out), "--trace"]) == 0

    files = sorted(p.relative_to(runs[0]) for p in runs[0].rglob("*") if p.is_file())
    assert files
    for name in files:
        assert (runs[0] / name).read_bytes() == (runs[1] / name).read_bytes()


@pytest.mark.slow
def test_different_seeds_give_different_traces(shipped):
    config = shipped("ctxswitch").model_copy(update={"horizon_ticks": 3000})
    first = run_scenario(config.with_seed(1), Mode.TEK, trace=True)
    second = run_scenario(config.with_seed(2), Mode.TEK, trace=True)
    assert first.schedule_trace != second.schedule_trace
