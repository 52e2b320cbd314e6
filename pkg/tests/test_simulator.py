"""Exact FPPS simulator: frozen worked examples and cross-validation.

Expected values here were computed by hand from the schedule structure
before the implementation existed (busy period 111 = 2*31 + 49, the run
segments of the two-task example, the burst response times 7/14/21) and,
where marked, re-derived with the independent workload recurrence.
"""

import random
from fractions import Fraction

import pytest

from rtpta import components as comp
from rtpta import simulator as sim

F = Fraction


class TestPairExample:
    def test_busy_period_and_segments(self, spec_idle_pair, ref_point):
        res = sim.simulate(spec_idle_pair, ref_point)
        assert res.busy_period_end == 111
        assert res.schedulable
        assert sim.gantt_segments(res.log) == [
            {"task": "t1", "start": 0, "end": 31},
            {"task": "t2", "start": 31, "end": 60},
            {"task": "t1", "start": 60, "end": 91},
            {"task": "t2", "start": 91, "end": 111},
        ]

    def test_worst_responses(self, spec_idle_pair, ref_point):
        res = sim.simulate(spec_idle_pair, ref_point)
        assert res.worst_response == {"t1": F(31), "t2": F(111)}

    def test_overload_point(self, spec_idle_pair):
        ok, _ = sim.is_schedulable(spec_idle_pair, {"T1": F(40), "T2": F(80)})
        assert not ok

    def test_overload_needs_horizon(self, spec_idle_pair):
        with pytest.raises(sim.SimulationError):
            sim.simulate(spec_idle_pair, {"T1": F(40), "T2": F(80)})

    def test_empty_task_set_idles_at_zero(self):
        spec = comp.ComponentSpec(tasks=())
        res = sim.simulate(spec, {})
        assert res.busy_period_end == 0
        assert res.schedulable


class TestBusyPeriodRecurrence:
    def test_pair_example(self, spec_idle_pair, ref_point):
        assert sim.busy_period_length(spec_idle_pair, ref_point) == 111

    def test_single_task(self):
        spec = comp.ComponentSpec(
            tasks=(comp.TaskSpec("a", 1, F(2), F(8), comp.Periodic(F(8))),),
        )
        assert sim.busy_period_length(spec, {}) == 2

    def test_overload_returns_none(self, spec_idle_pair):
        assert sim.busy_period_length(spec_idle_pair, {"T1": F(40), "T2": F(80)}) is None

    def test_agreement_with_simulation_on_random_sets(self):
        rng = random.Random(2024)
        checked = 0
        while checked < 100:
            n = rng.randint(2, 4)
            tasks = []
            for i in range(n):
                period = F(rng.randint(8, 120), rng.choice([1, 1, 2]))
                wcet = F(rng.randint(1, max(1, int(period) // 3)), 1)
                burst = rng.choice([0, 0, 0, 1])
                if burst:
                    act = comp.ArrivalCurve(rng.randint(1, 3), period)
                else:
                    act = comp.Periodic(period)
                tasks.append(
                    comp.TaskSpec(f"t{i}", i + 1, wcet, period * 2, act)
                )
            spec = comp.ComponentSpec(tasks=tuple(tasks))
            if sim.utilization(spec, {}) >= F(95, 100):
                continue
            checked += 1
            res = sim.simulate(spec, {})
            assert sim.busy_period_length(spec, {}) == res.busy_period_end


class TestHyperperiod:
    def test_values_from_lcm(self, spec_idle_pair):
        assert sim.hyperperiod(spec_idle_pair, {"T1": F(60), "T2": F(120)}) == 120
        assert sim.hyperperiod(spec_idle_pair, {"T1": F(60), "T2": F(121)}) == 7260

    def test_single_task(self):
        spec = comp.ComponentSpec(
            tasks=(comp.TaskSpec("a", 1, F(2), F(8), comp.Periodic(F(8))),),
        )
        assert sim.hyperperiod(spec, {}) == 8

    def test_non_periodic_rejected(self, spec_component):
        with pytest.raises(sim.SimulationError):
            sim.hyperperiod(spec_component, {"P": F(30), "D2": F(20), "Nu": F(1)})


class TestComponentExample:
    @pytest.mark.parametrize(
        "nu,p,d2,expected",
        [
            (1, 20, 10, True),
            (3, 47, 21, True),
            (3, 47, 20, False),
            (3, 46, 21, False),
            (2, 24, 14, True),
            (2, 24, 13, False),
            (2, 23, 14, False),
        ],
    )
    def test_table_spot_checks(self, spec_component, nu, p, d2, expected):
        ok, _ = sim.is_schedulable(
            spec_component, {"Nu": F(nu), "P": F(p), "D2": F(d2)}
        )
        assert ok == expected

    def test_burst_responses(self, spec_component):
        _, worst = sim.is_schedulable(
            spec_component, {"Nu": F(3), "P": F(47), "D2": F(50)}
        )
        assert worst["t2"] == 21
        _, worst = sim.is_schedulable(
            spec_component, {"Nu": F(2), "P": F(30), "D2": F(50)}
        )
        assert worst["t2"] == 14
        _, worst = sim.is_schedulable(
            spec_component, {"Nu": F(1), "P": F(30), "D2": F(50)}
        )
        assert worst["t2"] == 7


class TestWorkConservation:
    def test_processor_never_idles_with_pending_work(self, spec_idle_pair):
        rng = random.Random(7)
        for _ in range(20):
            t1 = F(rng.randint(40, 120))
            t2 = F(rng.randint(80, 200))
            if F(31) / t1 + F(49) / t2 >= 1:
                continue
            res = sim.simulate(spec_idle_pair, {"T1": t1, "T2": t2})
            # between consecutive dispatch/end events the log never shows an
            # idle entry before the busy period end
            idles = [e for e in res.log if e.kind == "idle"]
            assert len(idles) == 1
            assert idles[0].time == res.busy_period_end


class TestResponseMonotonicity:
    def test_raising_periods_never_hurts(self, spec_idle_pair):
        base_ok, base = sim.is_schedulable(spec_idle_pair, {"T1": F(60), "T2": F(120)})
        assert base_ok
        for bump in (F(5), F(10)):
            ok, worst = sim.is_schedulable(
                spec_idle_pair, {"T1": F(60) + bump, "T2": F(120)}
            )
            assert ok
            assert worst["t2"] <= base["t2"]


class TestOffsets:
    def offset_spec(self, off2):
        return comp.ComponentSpec(
            tasks=(
                comp.TaskSpec("a", 1, F(31), F(60), comp.Periodic(F(60))),
                comp.TaskSpec(
                    "b", 2, F(49), F(120), comp.Periodic(F(120)), offset=off2
                ),
            ),
        )

    def test_zero_offsets_match_plain_verdict(self, spec_idle_pair, ref_point):
        res = sim.simulate_with_offsets(spec_idle_pair, ref_point)
        ok, _ = sim.is_schedulable(spec_idle_pair, ref_point)
        assert res.schedulable == ok

    def test_window_length(self):
        spec = self.offset_spec(F(30))
        res = sim.simulate_with_offsets(spec, {})
        # events never exceed 2H + max offset = 270
        assert all(e.time <= 270 for e in res.log)

    def test_offset_pair_schedulable(self):
        spec = self.offset_spec(F(30))
        res = sim.simulate_with_offsets(spec, {})
        assert res.schedulable

    def test_conservative_transform_direction(self):
        # zero-offset verdict implies the offset verdict on samples
        rng = random.Random(5)
        for _ in range(5):
            t1 = F(rng.randint(56, 79))
            spec = comp.ComponentSpec(
                tasks=(
                    comp.TaskSpec("a", 1, F(31), t1, comp.Periodic(t1)),
                    comp.TaskSpec(
                        "b", 2, F(49), F(120), comp.Periodic(F(120)),
                        offset=F(rng.randint(0, 20)),
                    ),
                ),
            )
            flat = comp.zero_offset_transform(spec)
            ok_flat, _ = sim.is_schedulable(flat, {})
            if ok_flat:
                assert sim.simulate_with_offsets(spec, {}).schedulable

    def test_non_periodic_rejected(self, spec_component):
        with pytest.raises(sim.SimulationError):
            sim.simulate_with_offsets(
                spec_component, {"P": F(30), "D2": F(20), "Nu": F(1)}
            )


class TestSerialization:
    def test_tsv_shape(self, spec_idle_pair, ref_point):
        res = sim.simulate(spec_idle_pair, ref_point)
        tsv = sim.log_to_tsv(res.log)
        lines = tsv.rstrip("\n").split("\n")
        assert lines[0] == "0\tarrival\tt1"
        assert all(len(l.split("\t")) == 3 for l in lines)

    def test_result_json_exact_numbers(self, spec_idle_pair, ref_point):
        res = sim.simulate(spec_idle_pair, ref_point)
        data = sim.result_to_json(res)
        assert data["busy_period_end"] == 111
        assert data["worst_response"]["t2"] == 111
        assert data["schedulable"] is True
