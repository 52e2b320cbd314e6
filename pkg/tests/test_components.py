"""Component descriptions, JSON round-trips, and the automata builders."""

import json
import os
from fractions import Fraction

import pytest

from rtpta import automata as am
from rtpta import components as comp
from rtpta import geometry as g

F = Fraction


def small_task(name="t", prio=1, wcet=2, period=8):
    return comp.TaskSpec(
        name, prio, F(wcet), F(period), comp.Periodic(F(period))
    )


class TestSpecValidation:
    def test_duplicate_priorities_rejected(self):
        with pytest.raises(am.ModelError):
            comp.ComponentSpec(
                tasks=(small_task("a", 1), small_task("b", 1)),
            )

    def test_undeclared_parameter_rejected(self):
        with pytest.raises(am.ModelError):
            comp.ComponentSpec(
                tasks=(
                    comp.TaskSpec(
                        "a", 1, F(2), comp.ParamRef("T"), comp.Periodic(comp.ParamRef("T"))
                    ),
                ),
            )

    def test_reference_outside_range_rejected(self):
        with pytest.raises(am.ModelError):
            comp.ComponentSpec(
                tasks=(small_task(),),
                parameters=(comp.ParamDecl("T", "continuous", F(1), F(2), F(5)),),
            )


class TestJsonRoundTrip:
    def test_round_trip(self, spec_component):
        data = comp.spec_to_json(spec_component)
        back = comp.spec_from_json(data)
        assert comp.spec_to_json(back) == data

    def test_rational_strings_survive(self):
        spec = comp.ComponentSpec(
            tasks=(
                comp.TaskSpec(
                    "a", 1, F(5, 2), F(8), comp.Periodic(F(8))
                ),
            ),
        )
        data = comp.spec_to_json(spec)
        assert data["tasks"][0]["wcet"] == "5/2"
        assert comp.spec_from_json(data).tasks[0].wcet == F(5, 2)

    def test_malformed_rejected(self):
        with pytest.raises(am.ModelError):
            comp.spec_from_json({"tasks": [{"name": "x"}]})


class TestZeroOffsetTransform:
    def test_zero_offsets_unchanged(self, spec_idle_pair):
        out = comp.zero_offset_transform(spec_idle_pair)
        assert out is spec_idle_pair
        assert not out.conservative_offsets

    def test_offsets_cleared_and_flagged(self):
        spec = comp.ComponentSpec(
            tasks=(
                small_task("a", 1),
                comp.TaskSpec(
                    "b", 2, F(1), F(10), comp.Periodic(F(10)), offset=F(3)
                ),
            ),
        )
        out = comp.zero_offset_transform(spec)
        assert all(t.offset == 0 for t in out.tasks)
        assert out.conservative_offsets


class TestTaskAutomaton:
    def build(self, wcet=31, deadline=60):
        spec = comp.ComponentSpec(
            tasks=(
                comp.TaskSpec("x", 1, F(wcet), F(deadline), comp.Periodic(F(deadline))),
            ),
        )
        ctx = comp._Ctx(spec, {})
        return comp.build_task_automaton(spec.tasks[0], ctx)

    def test_locations(self):
        auto = self.build()
        ids = {loc.id for loc in auto.locations}
        assert ids == {"Idle", "ActEvent", "Waiting", "Running", "DeadlineMissed"}
        assert auto.location("ActEvent").committed

    def test_exec_clock_runs_only_in_running(self):
        auto = self.build()
        c = next(v for v in auto.clocks if v.name == "c_x")
        assert auto.location("Running").slope.rate(c) == 1
        for loc in ("Idle", "ActEvent", "Waiting"):
            assert auto.location(loc).slope.rate(c) == 0

    def test_arrival_clock_always_runs(self):
        auto = self.build()
        d = next(v for v in auto.clocks if v.name == "d_x")
        for loc in auto.locations:
            assert loc.slope.rate(d) == 1

    def test_miss_location_is_sink(self):
        auto = self.build()
        assert auto.outgoing("DeadlineMissed") == []

    def test_multi_activation_completion_guard(self):
        # after two arrivals the completion guard asks for c = 2*wcet
        auto = self.build(wcet=5)
        end = next(t for t in auto.transitions if t.action == "end_x")
        [row] = end.guard
        ineq = row.instantiate({"N_x": 2})
        c = next(v for v in auto.clocks if v.name == "c_x")
        assert ineq.evaluate({c: F(10)})
        assert not ineq.evaluate({c: F(5)})


class TestActivations:
    def test_periodic_events_at_multiples(self, spec_idle_pair):
        net = comp.build_component(spec_idle_pair, with_time_clock=True)
        cnet = am.concrete_instantiate(
            net, am.resolve_point(net, {"T1": 60, "T2": 200})
        )
        run = am.canonical_run(cnet, cnet.initial_k(), 40, comp.label_rank)
        times = [
            s.instant for s in run.steps if s.label == "arrival_event_t1"
        ]
        assert times[:2] == [F(0), F(60)]

    def test_offset_zero_cyclic_equals_critical_instant(self):
        spec = comp.ComponentSpec(
            tasks=(small_task("a", 1, wcet=2, period=8),),
            scheduler_variant="cyclic",
        )
        ctx = comp._Ctx(spec, {})
        cyclic = comp.build_periodic_activation(spec.tasks[0], ctx, critical_instant=False)
        crit = comp.build_periodic_activation(spec.tasks[0], ctx, critical_instant=True)
        assert am.network_to_json(am.PsaNetwork([cyclic])) == am.network_to_json(
            am.PsaNetwork([crit])
        )

    def test_sporadic_critical_equals_periodic_critical(self):
        task = comp.TaskSpec("s", 1, F(2), F(8), comp.Sporadic(F(8)))
        spec = comp.ComponentSpec(tasks=(task,))
        ctx = comp._Ctx(spec, {})
        spor = comp.build_sporadic_activation(task, ctx, critical_instant=True)
        per_task = comp.TaskSpec("s", 1, F(2), F(8), comp.Periodic(F(8)))
        per = comp.build_periodic_activation(per_task, ctx, critical_instant=True)
        assert am.network_to_json(am.PsaNetwork([spor])) == am.network_to_json(
            am.PsaNetwork([per])
        )

    def test_cyclic_sporadic_admits_gaps_and_lower_bound(self):
        # guard is x >= T: the emission may be late but never early
        task = comp.TaskSpec("s", 1, F(2), F(60), comp.Sporadic(F(60)))
        spec = comp.ComponentSpec(tasks=(task,), scheduler_variant="cyclic")
        ctx = comp._Ctx(spec, {})
        auto = comp.build_sporadic_activation(task, ctx, critical_instant=False)
        net = am.PsaNetwork([auto])
        result = am.bounded_explore(net, net.initial_k(), 3)
        x = next(iter(auto.clocks))
        for src, label, dst in result.edges:
            if label != "arrival_event_s":
                continue
            state = result.states[dst]
            lo, _, _, _ = g.var_interval(state.zone, x)
            assert lo == 0  # reset right after emission

    def test_burst_emission_counts(self, spec_component):
        net = comp.build_component(
            spec_component, discrete={"Nu": 2}, with_time_clock=True
        )
        cnet = am.concrete_instantiate(
            net, am.resolve_point(net, {"P": 100, "D2": 50})
        )
        run = am.canonical_run(cnet, cnet.initial_k(), 60, comp.label_rank)
        times = [s.instant for s in run.steps if s.label == "arrival_event_t2"]
        assert times[:4] == [F(0), F(0), F(100), F(200)]

    def test_burst_respects_arrival_curve_bound(self, spec_component):
        # in any prefix, arrivals within a window of length W stay below
        # burst + floor(W/P)
        net = comp.build_component(
            spec_component, discrete={"Nu": 3}, with_time_clock=True
        )
        cnet = am.concrete_instantiate(
            net, am.resolve_point(net, {"P": 30, "D2": 50})
        )
        run = am.canonical_run(cnet, cnet.initial_k(), 250, comp.label_rank)
        times = [s.instant for s in run.steps if s.label == "arrival_event_t2"]
        assert len(times) >= 4
        for i in range(len(times)):
            for j in range(i, len(times)):
                window = times[j] - times[i]
                count = j - i + 1
                assert count <= 3 + window // 30


class TestScheduler:
    def test_degenerate_single_task(self):
        sched = comp.build_fpps_scheduler([small_task("a", 1)], comp.CYCLIC)
        labels = {t.action for t in sched.transitions}
        assert labels == {"arrival_a", "dispatch_a", "end_a", "sched_idle"}

    def test_two_task_structure(self, spec_idle_pair):
        sched = comp.build_fpps_scheduler(list(spec_idle_pair.tasks), comp.IDLE_TIME)
        ids = {loc.id for loc in sched.locations}
        assert "Rtt1" in ids and "Rtt2" in ids and "Stop" in ids
        assert any(i.startswith("Att1") for i in ids)
        stop_out = sched.outgoing("Stop")
        assert stop_out == []

    def test_preemption_only_by_higher_priority(self, spec_idle_pair):
        sched = comp.build_fpps_scheduler(list(spec_idle_pair.tasks), comp.IDLE_TIME)
        # t1 is never preempted (no preemption_t1 edge), t2 can be
        labels = {t.action for t in sched.transitions}
        assert "preemption_t2" in labels
        assert "preemption_t1" not in labels
        assert "preemption_t1" in sched.declared_actions

    def test_task_cap(self):
        tasks = [small_task(f"t{i}", i, period=100 + i) for i in range(1, 8)]
        with pytest.raises(am.ModelError):
            comp.build_fpps_scheduler(tasks, comp.CYCLIC)

    def test_task_cap_override(self):
        tasks = [small_task(f"t{i}", i, period=100 + i) for i in range(1, 8)]
        os.environ[comp.MAX_TASKS_ENV] = "8"
        try:
            sched = comp.build_fpps_scheduler(tasks, comp.CYCLIC)
            assert sched.locations
        finally:
            del os.environ[comp.MAX_TASKS_ENV]


class TestBuildComponent:
    def test_pair_network_has_five_automata(self, spec_idle_pair):
        net = comp.build_component(spec_idle_pair)
        assert len(net.automata) == 5

    def test_component_network_has_seven_automata(self, spec_component):
        net = comp.build_component(spec_component, discrete={"Nu": 2})
        assert len(net.automata) == 7

    def test_build_deterministic(self, spec_component):
        a = comp.build_component(spec_component, discrete={"Nu": 3})
        b = comp.build_component(spec_component, discrete={"Nu": 3})
        assert am.network_to_json(a) == am.network_to_json(b)

    def test_initial_k_is_declared_ranges(self, spec_idle_pair):
        net = comp.build_component(spec_idle_pair)
        k = net.initial_k()
        t1, t2 = net.param_by_name("T1"), net.param_by_name("T2")
        assert g.satisfies(k, {t1: F(40), t2: F(200)})
        assert not g.satisfies(k, {t1: F(39), t2: F(200)})

    def test_discrete_required(self, spec_component):
        with pytest.raises(am.ModelError):
            comp.build_component(spec_component)
