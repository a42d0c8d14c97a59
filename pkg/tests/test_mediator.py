"""Tests for the CPU Mediator's Fast and Lazy Regions."""
from fractions import Fraction

import pytest

from error_handling import NotFoundError, ValidationError
from scheduler.core import SchedulerState
from scheduler.mediator import Region, RegionKind, RegionNode
from scheduler.models import Criticality, GroupName, SchedParams, SchedPolicy, ThreadState
from simulation.prng import XorShift64Star

TC = Criticality.TIME_CRITICAL
NTC = Criticality.NON_TIME_CRITICAL


@pytest.fixture
def loaded(sched, make_entity):
    """One SCHED_TEK time-critical thread in urgent plus a hog in every group."""
    caller = make_entity(1, group=GroupName.URGENT, criticality=TC, policy=SchedPolicy.TEK)
    hogs = [
        make_entity(10 + i, group=group, nice=i)
        for i, group in enumerate((GroupName.URGENT, GroupName.NORMAL, GroupName.SERVICE, GroupName.BACKGROUND))
    ]
    for thread in [caller] + hogs:
        sched.admit(thread)
    for now in range(8):
        sched.now = now
        sched.account(sched.pick_next())
    sched.now = 8
    return sched, caller, hogs


@pytest.mark.unit
class TestRegion:
    def test_link_order_and_unlink(self):
        region = Region(RegionKind.FAST)
        for tid in (3, 1, 2):
            region.link(RegionNode(tid))
        assert region.tids() == (3, 1, 2)
        assert len(region) == 3 and 1 in region

        region.unlink(1)
        assert region.tids() == (3, 2)
        region.unlink(3)
        region.unlink(2)
        assert not region
        assert list(region) == []

    def test_unlink_missing(self):
        with pytest.raises(KeyError):
            Region(RegionKind.LAZY).unlink(5)


@pytest.mark.unit
class TestEnterTek:
    def test_migrates_time_critical_to_fast_and_others_to_lazy(self, loaded):
        sched, caller, hogs = loaded
        report = sched.mediator.enter_tek(caller.tid)

        assert report.fast == [1]
        assert sorted(report.lazy) == [10, 11, 12, 13]
        assert caller.state is ThreadState.IN_FAST
        assert all(h.state is ThreadState.IN_LAZY for h in hogs)
        assert all(not g.queue for g in sched.groups.values())
        assert sched.mediator.active
        sched.check_invariants()

    def test_fast_region_runs_exclusively(self, loaded):
        sched, caller, _ = loaded
        sched.mediator.enter_tek(caller.tid)
        for now in range(8, 30):
            sched.now = now
            assert sched.pick_next() == caller.tid
            sched.account(caller.tid)

    def test_repeated_call_moves_nothing(self, loaded):
        sched, caller, _ = loaded
        sched.mediator.enter_tek(caller.tid)
        again = sched.mediator.enter_tek(caller.tid)
        assert again.fast == [] and again.lazy == []

    def test_no_lazy_migration_when_fast_stays_empty(self, loaded):
        sched, caller, hogs = loaded
        sched.dequeue(caller.tid)
        caller.state = ThreadState.AWAITING_EVENT

        report = sched.mediator.enter_tek(caller.tid)
        assert report.fast == [] and report.lazy == []
        assert all(h.state is ThreadState.RUNNABLE for h in hogs)

    def test_only_callers_group_goes_fast(self, sched, make_entity):
        caller = make_entity(1, group=GroupName.URGENT, criticality=TC, policy=SchedPolicy.TEK)
        other_tc = make_entity(2, group=GroupName.NORMAL, criticality=TC)
        for thread in (caller, other_tc):
            sched.admit(thread)
        report = sched.mediator.enter_tek(caller.tid)
        assert report.fast == [1]
        assert other_tc.state is ThreadState.RUNNABLE

    def test_unset_criticality_goes_lazy(self, sched, make_entity):
        caller = make_entity(1, group=GroupName.URGENT, criticality=TC, policy=SchedPolicy.TEK)
        unset = make_entity(2, criticality=Criticality.UNSET)
        sched.admit(caller)
        sched.admit(unset)
        assert sched.mediator.enter_tek(caller.tid).lazy == [2]

    @pytest.mark.parametrize("criticality,policy", [
        (NTC, SchedPolicy.TEK),
        (TC, SchedPolicy.NORMAL),
    ])
    def test_ineligible_caller(self, sched, make_entity, criticality, policy):
        thread = make_entity(1, criticality=criticality, policy=policy)
        sched.admit(thread)
        with pytest.raises(ValidationError, match="not eligible for SCHED_TEK"):
            sched.mediator.enter_tek(1)

    def test_unknown_caller(self, sched):
        with pytest.raises(ValidationError, match="not eligible"):
            sched.mediator.enter_tek(77)

    def test_admission_while_active(self, loaded, make_entity):
        sched, caller, _ = loaded
        sched.mediator.enter_tek(caller.tid)
        late_tc = make_entity(20, group=GroupName.SERVICE, criticality=TC)
        late_ntc = make_entity(21, group=GroupName.URGENT)
        sched.admit(late_tc)
        sched.admit(late_ntc)
        assert sched.mediator.location(20) == RegionKind.FAST
        assert sched.mediator.location(21) == RegionKind.LAZY


@pytest.mark.unit
class TestSetSchedParam:
    def test_tek_on_non_time_critical(self, sched, make_entity):
        sched.admit(make_entity(1))
        with pytest.raises(ValidationError, match="criticality mismatch"):
            sched.mediator.set_sched_param(1, SchedParams.of(SchedPolicy.TEK, 0))

    def test_tek_triggers_enter_tek(self, sched, make_entity):
        tc = make_entity(1, group=GroupName.URGENT, criticality=TC)
        hog = make_entity(2)
        sched.admit(tc)
        sched.admit(hog)
        report = sched.mediator.set_sched_param(1, SchedParams.of(SchedPolicy.TEK, -2))
        assert tc.policy is SchedPolicy.TEK and tc.nice.value == -2
        assert report.fast == [1] and report.lazy == [2]

    def test_lazy_member_restored_with_new_params(self, loaded):
        sched, caller, hogs = loaded
        sched.mediator.enter_tek(caller.tid)
        sched.mediator.set_sched_param(11, SchedParams.of(SchedPolicy.NORMAL, 7))

        sched.dequeue(caller.tid)
        caller.state = ThreadState.AWAITING_EVENT
        sched.mediator.exit_tek_if_empty()
        assert hogs[1].nice.value == 7

    def test_leaving_tek_empties_fast_and_restores(self, sched, make_entity):
        tc = make_entity(1, group=GroupName.URGENT, criticality=TC)
        hog = make_entity(2)
        sched.admit(tc)
        sched.admit(hog)
        sched.mediator.set_sched_param(1, SchedParams.of(SchedPolicy.TEK, 0))

        assert sched.mediator.set_sched_param(1, SchedParams.of(SchedPolicy.NORMAL, 0)) is None
        assert not sched.mediator.fast
        assert sched.in_group_queue(1) and tc.state is ThreadState.RUNNABLE

        report = sched.mediator.exit_tek_if_empty()
        assert report.restored == [2]
        assert sched.in_group_queue(2) and hog.state is ThreadState.RUNNABLE
        assert not sched.mediator.active
        sched.check_invariants()

    def test_unknown_thread(self, sched):
        with pytest.raises(NotFoundError, match="no such thread"):
            sched.mediator.set_sched_param(9, SchedParams.of(SchedPolicy.NORMAL, 0))


@pytest.mark.unit
class TestRestoration:
    def test_restores_placement_exactly(self, loaded):
        sched, caller, hogs = loaded
        before = sched.snapshot()
        saved = {h.tid: h.vruntime for h in hogs}

        sched.mediator.enter_tek(caller.tid)
        for now in range(8, 20):
            sched.now = now
            sched.account(sched.pick_next())
        sched.dequeue(caller.tid)
        caller.state = ThreadState.AWAITING_EVENT

        report = sched.mediator.exit_tek_if_empty()
        assert sorted(report.restored) == [10, 11, 12, 13]
        assert sched.snapshot() == before
        assert all(h.state is ThreadState.RUNNABLE for h in hogs)
        assert all(h.vruntime >= saved[h.tid] for h in hogs)
        assert not sched.mediator.active and not sched.mediator.lazy
        sched.check_invariants()

    def test_stale_vruntime_raised_to_group_minimum(self, sched, make_entity):
        stale = make_entity(1, group=GroupName.URGENT)
        stale.vruntime = Fraction(3)
        queued = make_entity(2, group=GroupName.URGENT, criticality=TC)
        queued.vruntime = Fraction(900)
        caller = make_entity(3, group=GroupName.NORMAL, criticality=TC, policy=SchedPolicy.TEK)
        for thread in (stale, queued, caller):
            sched.admit(thread)

        report = sched.mediator.enter_tek(caller.tid)
        assert report.fast == [3] and report.lazy == [1]
        assert sched.in_group_queue(2)

        sched.dequeue(caller.tid)
        caller.state = ThreadState.AWAITING_EVENT
        assert sched.mediator.exit_tek_if_empty().restored == [1]
        assert stale.vruntime == Fraction(900)
        assert sched.groups[GroupName.URGENT].queue.min_vruntime() == Fraction(900)

    def test_nothing_to_restore_while_fast_non_empty(self, loaded):
        sched, caller, _ = loaded
        sched.mediator.enter_tek(caller.tid)
        assert sched.mediator.exit_tek_if_empty() is None

    def test_link_operations_counted(self, loaded):
        sched, caller, _ = loaded
        mediator = sched.mediator
        mediator.enter_tek(caller.tid)
        assert mediator.link_ops == 5
        sched.dequeue(caller.tid)
        caller.state = ThreadState.AWAITING_EVENT
        mediator.exit_tek_if_empty()
        assert mediator.link_ops == 10

    def test_event_log(self, loaded):
        sched, caller, _ = loaded
        sched.mediator.enter_tek(caller.tid)
        sched.dequeue(caller.tid)
        caller.state = ThreadState.AWAITING_EVENT
        sched.mediator.exit_tek_if_empty()

        log = sched.mediator.event_log
        assert (log[0].tick, log[0].tid, log[0].source, log[0].target) == (8, 1, "urgent", "fast")
        restores = [e for e in log if e.source == RegionKind.LAZY]
        assert {e.target for e in restores} == {"urgent", "normal", "service", "background"}

    def test_lazy_wait_recorded(self, loaded):
        sched, caller, _ = loaded
        sched.mediator.enter_tek(caller.tid)
        sched.now = 12
        sched.dequeue(caller.tid)
        caller.state = ThreadState.AWAITING_EVENT
        sched.mediator.exit_tek_if_empty()
        assert sched.mediator.lazy_waits[10] == 5


@pytest.mark.unit
class TestStarvationBound:
    def test_lazy_thread_granted_a_tick(self, make_entity):
        sched = SchedulerState(max_lazy_delay=3)
        caller = make_entity(1, group=GroupName.URGENT, criticality=TC, policy=SchedPolicy.TEK)
        hog = make_entity(2)
        sched.admit(caller)
        sched.admit(hog)
        sched.mediator.enter_tek(caller.tid)

        picks = []
        for now in range(8):
            sched.now = now
            picks.append(sched.pick_next())
        assert picks == [1, 1, 1, 2, 1, 1, 1, 2]

    def test_bound_must_be_positive(self):
        with pytest.raises(ValidationError):
            SchedulerState(max_lazy_delay=0)


@pytest.mark.unit
def test_randomized_strict_delay_and_restoration(make_entity):
    """Lazy threads never run while Fast is non-empty; restoration is exact."""
    for seed in range(25):
        rng = XorShift64Star(seed)
        sched = SchedulerState()
        groups = list(GroupName)
        threads = []
        for tid in range(1, rng.randint(3, 12)):
            crit = TC if rng.randint(0, 3) == 0 else NTC
            threads.append(make_entity(
                tid, group=groups[rng.randint(0, 3)], nice=rng.randint(-5, 5), criticality=crit,
                policy=SchedPolicy.TEK if crit is TC else SchedPolicy.NORMAL,
            ))
        for thread in threads:
            sched.admit(thread)
        callers = [t for t in threads if t.criticality is TC]
        if not callers:
            continue
        before = sched.snapshot()
        sched.mediator.enter_tek(callers[0].tid)

        fast = set(sched.mediator.fast.tids())
        for now in range(40):
            sched.now = now
            tid = sched.pick_next()
            if sched.mediator.fast:
                assert tid in fast
            sched.account(tid)
            if now % 7 == 6 and sched.mediator.fast:
                done = sched.mediator.fast.tids()[0]
                sched.dequeue(done)
                sched.threads[done].state = ThreadState.AWAITING_EVENT
                fast.discard(done)
            sched.mediator.exit_tek_if_empty()
            sched.check_invariants()

        live = {t[0] for t in sched.snapshot()}
        assert [s for s in before if s[0] in live] == sched.snapshot()
