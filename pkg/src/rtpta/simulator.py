"""Exact event-driven FPPS simulator: the ground-truth oracle.

Simulates the critical-instant busy period with exact rational arithmetic:
all tasks release at time zero (arrival-curve tasks with their full burst),
subsequent jobs arrive as early as their pattern allows, and the simulation
stops at the first processor idle instant (or a caller horizon under
overload).  Jobs are tracked individually (FIFO within a task) so per-job
deadlines and response times are exact.

The event log is task-level, matching the observable alphabet of the
automata model: an ``end`` entry marks the moment a task's pending-job count
returns to zero (individual job completions inside a backlog are bookkeeping
only), and within one instant events are ordered completions first, then
deadline checks, then arrivals, then scheduling decisions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .automata import ModelError
from .components import (
    ArrivalCurve,
    ComponentSpec,
    ParamRef,
    Periodic,
    Quantity,
    Sporadic,
    TaskSpec,
)
from .rationals import rational_lcm, to_fraction

ZERO = Fraction(0)
ONE = Fraction(1)


class SimulationError(ModelError):
    pass


@dataclass(frozen=True)
class EventLogEntry:
    time: Fraction
    kind: str  # arrival | dispatch | preemption | end | deadline_miss | idle
    task: str


@dataclass
class _Job:
    task: str
    arrival: Fraction
    remaining: Fraction
    demand: Fraction
    deadline: Fraction
    finish: Optional[Fraction] = None
    miss_logged: bool = False


@dataclass
class SimulationResult:
    log: List[EventLogEntry]
    jobs: Dict[str, List[_Job]]
    busy_period_end: Optional[Fraction]
    schedulable: bool
    worst_response: Dict[str, Optional[Fraction]]
    utilization: Fraction
    horizon_reached: bool = False

    def events(self) -> List[Tuple[Fraction, str, str]]:
        return [(e.time, e.kind, e.task) for e in self.log]

    def first_miss(self) -> Optional[EventLogEntry]:
        for e in self.log:
            if e.kind == "deadline_miss":
                return e
        return None


def _concrete(q: Quantity, point: Mapping[str, Fraction], what: str) -> Fraction:
    if isinstance(q, ParamRef):
        if q.name not in point:
            raise SimulationError(f"missing value for parameter {q.name} ({what})")
        return Fraction(point[q.name])
    return Fraction(q)


@dataclass(frozen=True)
class _ConcreteTask:
    name: str
    priority: int
    wcet: Fraction
    deadline: Fraction
    burst: int
    period: Fraction
    offset: Fraction

    def arrival(self, index: int) -> Fraction:
        """k-th arrival of the greedy (earliest-allowed) stream."""
        if index < self.burst:
            return self.offset
        return self.offset + (index - self.burst + 1) * self.period


def _concretize(
    spec: ComponentSpec,
    point: Mapping[str, Fraction],
    honor_offsets: bool,
    demand_scale: Fraction,
) -> List[_ConcreteTask]:
    out = []
    for t in spec.by_priority():
        act = t.activation
        if isinstance(act, Periodic):
            burst, period = 1, _concrete(act.period, point, f"{t.name}.period")
        elif isinstance(act, Sporadic):
            burst, period = 1, _concrete(
                act.min_interarrival, point, f"{t.name}.min_interarrival"
            )
        else:
            assert isinstance(act, ArrivalCurve)
            if isinstance(act.burst, ParamRef):
                raw = point.get(act.burst.name)
                if raw is None:
                    raise SimulationError(f"missing burst value {act.burst.name}")
                if Fraction(raw).denominator != 1:
                    raise SimulationError(f"burst {act.burst.name} must be integral")
                burst = int(raw)
            else:
                burst = act.burst
            period = _concrete(act.period, point, f"{t.name}.period")
        if period <= 0:
            raise SimulationError(f"{t.name}: period must be positive")
        wcet = _concrete(t.wcet, point, f"{t.name}.wcet") * demand_scale
        out.append(
            _ConcreteTask(
                name=t.name,
                priority=t.priority,
                wcet=wcet,
                deadline=_concrete(t.deadline, point, f"{t.name}.deadline"),
                burst=burst,
                period=period,
                offset=t.offset if honor_offsets else ZERO,
            )
        )
    return out


def utilization(spec: ComponentSpec, point: Mapping[str, Fraction]) -> Fraction:
    """Long-run demand rate: sum of wcet/period (burstiness is transient)."""
    tasks = _concretize(spec, point, honor_offsets=False, demand_scale=ONE)
    return sum((t.wcet / t.period for t in tasks), ZERO)


def hyperperiod(spec: ComponentSpec, point: Mapping[str, Fraction]) -> Fraction:
    """lcm of the task periods; requires a purely periodic task set."""
    periods = []
    for t in spec.tasks:
        if not isinstance(t.activation, Periodic):
            raise SimulationError("hyperperiod requires periodic tasks only")
        periods.append(_concrete(t.activation.period, point, f"{t.name}.period"))
    return rational_lcm(*periods)


class _Engine:
    """Shared exact FPPS core for both simulation entry points."""

    def __init__(self, tasks: Sequence[_ConcreteTask]):
        self.tasks = list(tasks)
        self.by_name = {t.name: t for t in tasks}
        self.queues: Dict[str, List[_Job]] = {t.name: [] for t in tasks}
        self.next_index: Dict[str, int] = {t.name: 0 for t in tasks}
        self.jobs: Dict[str, List[_Job]] = {t.name: [] for t in tasks}
        self.running: Optional[str] = None
        self.log: List[EventLogEntry] = []
        self.now = ZERO

    # all helpers assume self.now is the instant being processed

    def _emit(self, kind: str, task: str) -> None:
        self.log.append(EventLogEntry(self.now, kind, task))

    def _pending(self) -> List[str]:
        return [t.name for t in self.tasks if self.queues[t.name]]

    def _best_pending(self) -> Optional[str]:
        for t in self.tasks:  # priority order
            if self.queues[t.name]:
                return t.name
        return None

    def _next_arrival_time(self, task: _ConcreteTask) -> Fraction:
        return task.arrival(self.next_index[task.name])

    def _release_one(self, task: _ConcreteTask) -> None:
        idx = self.next_index[task.name]
        self.next_index[task.name] = idx + 1
        job = _Job(
            task=task.name,
            arrival=self.now,
            remaining=task.wcet,
            demand=task.wcet,
            deadline=self.now + task.deadline,
        )
        self.queues[task.name].append(job)
        self.jobs[task.name].append(job)
        self._emit("arrival", task.name)

    def _completion_phase(self) -> None:
        # pop finished head jobs; a task-level `end` fires only when the
        # backlog empties, after which the best waiting task is dispatched
        while self.running is not None:
            queue = self.queues[self.running]
            changed = False
            while queue and queue[0].remaining == 0:
                queue[0].finish = self.now
                queue.pop(0)
                changed = True
            if queue or not changed:
                return
            self._emit("end", self.running)
            self.running = None
            best = self._best_pending()
            if best is not None:
                self._emit("dispatch", best)
                self.running = best
                # a job preempted exactly at its completion frontier finishes
                # the moment it is re-dispatched; loop again

    def _miss_phase(self) -> None:
        for t in self.tasks:
            for job in self.queues[t.name]:
                if not job.miss_logged and job.deadline <= self.now:
                    job.miss_logged = True
                    self._emit("deadline_miss", t.name)

    def _arrival_phase(self) -> None:
        # wave 1: one job per task, priority order
        wave1 = []
        for t in self.tasks:
            if self._next_arrival_time(t) == self.now:
                self._release_one(t)
                wave1.append(t.name)
        if wave1:
            best = self._best_pending()
            assert best is not None
            if self.running is None:
                self._emit("dispatch", best)
                self.running = best
            elif (
                self.by_name[best].priority < self.by_name[self.running].priority
            ):
                self._emit("preemption", self.running)
                self._emit("dispatch", best)
                self.running = best
        # wave 2: remaining burst jobs, priority order, all at once
        for t in self.tasks:
            while self._next_arrival_time(t) == self.now:
                self._release_one(t)

    def _advance(self, until: Fraction) -> None:
        if self.running is not None and until > self.now:
            delta = until - self.now
            head = self.queues[self.running][0]
            head.remaining -= delta
            assert head.remaining >= 0
        self.now = until

    def next_event_time(self) -> Optional[Fraction]:
        times: List[Fraction] = []
        if self.running is not None:
            head = self.queues[self.running][0]
            times.append(self.now + head.remaining)
        for t in self.tasks:
            times.append(self._next_arrival_time(t))
        for q in self.queues.values():
            for job in q:
                if not job.miss_logged and job.deadline > self.now:
                    times.append(job.deadline)
        future = [x for x in times if x > self.now]
        if self.running is None and not self._pending():
            # only arrivals can wake the system
            future = [
                self._next_arrival_time(t)
                for t in self.tasks
                if self._next_arrival_time(t) > self.now
            ]
        return min(future) if future else None

    def run(
        self,
        horizon: Optional[Fraction],
        stop_at_idle: bool,
    ) -> Tuple[Optional[Fraction], bool]:
        """Returns (busy_period_end, horizon_reached)."""
        busy_end: Optional[Fraction] = None
        # process the critical instant
        self._completion_phase()
        self._miss_phase()
        self._arrival_phase()
        while True:
            if self.running is None and not self._pending():
                if busy_end is None:
                    busy_end = self.now
                self._emit("idle", "")
                if stop_at_idle:
                    return busy_end, False
            nxt = self.next_event_time()
            if nxt is None:
                return busy_end, False
            if horizon is not None and nxt > horizon:
                return busy_end, True
            self._advance(nxt)
            self._completion_phase()
            self._miss_phase()
            self._arrival_phase()


def simulate(
    spec: ComponentSpec,
    point: Mapping[str, Fraction],
    horizon: Optional[Fraction] = None,
    demand_scale: Fraction = ONE,
) -> SimulationResult:
    """Critical-instant simulation up to the first idle instant.

    Under overload (utilization >= 1) the busy period never ends, so a
    horizon is required; deadline misses are recorded per job at the exact
    instant the deadline passes.
    """
    u = utilization(spec, point) * demand_scale
    if u >= 1 and horizon is None:
        raise SimulationError(
            "utilization >= 1: the busy period never ends, pass a horizon"
        )
    tasks = _concretize(spec, point, honor_offsets=False, demand_scale=demand_scale)
    engine = _Engine(tasks)
    busy_end, horizon_reached = engine.run(horizon, stop_at_idle=True)
    missed = any(e.kind == "deadline_miss" for e in engine.log)
    worst: Dict[str, Optional[Fraction]] = {}
    for t in tasks:
        done = [j for j in engine.jobs[t.name] if j.finish is not None]
        worst[t.name] = max((j.finish - j.arrival for j in done), default=None)
    return SimulationResult(
        log=engine.log,
        jobs=engine.jobs,
        busy_period_end=busy_end,
        schedulable=not missed,
        worst_response=worst,
        utilization=u,
        horizon_reached=horizon_reached,
    )


def is_schedulable(
    spec: ComponentSpec, point: Mapping[str, Fraction]
) -> Tuple[bool, Dict[str, Optional[Fraction]]]:
    """Ground-truth verdict from the first busy period.

    Utilization above 1 is unschedulable outright.  At utilization exactly 1
    a purely periodic zero-offset set repeats with the hyperperiod, so one
    hyperperiod plus the largest deadline decides; bursty sets at exactly
    full utilization are rejected as out of scope.
    """
    u = utilization(spec, point)
    if u > 1:
        return False, {}
    if u == 1:
        try:
            h = hyperperiod(spec, point)
        except SimulationError as exc:
            raise SimulationError(
                "utilization exactly 1 with non-periodic activations"
            ) from exc
        dmax = max(
            _concrete(t.deadline, point, t.name) for t in spec.tasks
        )
        res = simulate(spec, point, horizon=h + dmax)
        return res.schedulable, res.worst_response
    res = simulate(spec, point)
    return res.schedulable, res.worst_response


def busy_period_length(
    spec: ComponentSpec, point: Mapping[str, Fraction]
) -> Optional[Fraction]:
    """Least fixpoint of the workload recurrence W = sum alpha_i(W) * C_i.

    Arrival counts are taken over the closed window [0, W], so a release
    landing exactly on the fixpoint extends the busy period, matching the
    simulator's first-idle-instant definition.  Returns None on divergence
    (utilization >= 1).
    """
    tasks = _concretize(spec, point, honor_offsets=False, demand_scale=ONE)
    if utilization(spec, point) >= 1:
        return None

    def arrivals_closed(t: _ConcreteTask, w: Fraction) -> int:
        # greedy stream: burst at 0, then one every period
        extra = w / t.period
        return t.burst + (extra.numerator // extra.denominator)

    w = sum((t.wcet * t.burst for t in tasks), ZERO)
    for _ in range(100000):
        nxt = sum((t.wcet * arrivals_closed(t, w) for t in tasks), ZERO)
        if nxt == w:
            return w
        w = nxt
    return None


def simulate_with_offsets(
    spec: ComponentSpec, point: Mapping[str, Fraction]
) -> SimulationResult:
    """Windowed simulation honoring offsets, for periodic tasks only.

    Covers [0, 2H + max offset], the window whose busy periods exhaust every
    reachable phase pattern of an offset periodic set; the verdict is a miss
    anywhere in the window.
    """
    for t in spec.tasks:
        if not isinstance(t.activation, Periodic):
            raise SimulationError("offset analysis requires periodic tasks only")
    u = utilization(spec, point)
    h = hyperperiod(spec, point)
    phi_max = max((t.offset for t in spec.tasks), default=ZERO)
    window = 2 * h + phi_max
    tasks = _concretize(spec, point, honor_offsets=True, demand_scale=ONE)
    engine = _Engine(tasks)
    _, horizon_reached = engine.run(window, stop_at_idle=False)
    missed = any(e.kind == "deadline_miss" for e in engine.log)
    worst: Dict[str, Optional[Fraction]] = {}
    for t in tasks:
        done = [j for j in engine.jobs[t.name] if j.finish is not None]
        worst[t.name] = max((j.finish - j.arrival for j in done), default=None)
    first_idle = next((e.time for e in engine.log if e.kind == "idle"), None)
    return SimulationResult(
        log=engine.log,
        jobs=engine.jobs,
        busy_period_end=first_idle,
        schedulable=not missed,
        worst_response=worst,
        utilization=u,
        horizon_reached=horizon_reached,
    )


# -- exports -----------------------------------------------------------------


def log_to_tsv(log: Iterable[EventLogEntry]) -> str:
    from .rationals import format_fraction

    lines = []
    for e in log:
        lines.append(f"{format_fraction(e.time)}\t{e.kind}\t{e.task}")
    return "\n".join(lines) + ("\n" if lines else "")


def gantt_segments(log: Sequence[EventLogEntry]) -> List[dict]:
    """Running intervals per task, reconstructed from the event log."""
    from .rationals import json_number

    segments: List[dict] = []
    running: Optional[str] = None
    since: Optional[Fraction] = None
    for e in log:
        if e.kind == "dispatch":
            running, since = e.task, e.time
        elif e.kind in ("preemption", "end", "idle") and running is not None:
            if e.kind in ("preemption", "end") and e.task not in ("", running):
                continue
            if since is not None and e.time > since:
                segments.append(
                    {
                        "task": running,
                        "start": json_number(since),
                        "end": json_number(e.time),
                    }
                )
            running, since = None, None
    return segments


def result_to_json(res: SimulationResult) -> dict:
    from .rationals import json_number

    return {
        "schedulable": res.schedulable,
        "busy_period_end": None
        if res.busy_period_end is None
        else json_number(res.busy_period_end),
        "utilization": json_number(res.utilization),
        "worst_response": {
            t: (None if r is None else json_number(r))
            for t, r in sorted(res.worst_response.items())
        },
        "horizon_reached": res.horizon_reached,
        "events": [
            {"time": json_number(e.time), "kind": e.kind, "task": e.task}
            for e in res.log
        ],
        "misses": [
            {"time": json_number(e.time), "task": e.task}
            for e in res.log
            if e.kind == "deadline_miss"
        ],
    }
