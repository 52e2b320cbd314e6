"""Declarative real-time component descriptions and automata builders.

A component is a set of fixed-priority preemptive tasks on one processor.
Each task compiles to a task automaton plus an activation automaton
(periodic, sporadic, or bursty arrival-curve), and the component adds one
generated scheduler automaton.  Two scheduler variants exist:

* ``cyclic``: the scheduler returns to Idle after work completes and the
  system runs forever (faithful long-run model);
* ``idle_time``: all tasks are released together at time zero, subsequent
  releases come as early as allowed, and the scheduler halts in a Stop
  location at the first processor idle instant, so the analysis covers
  exactly the worst-case busy period.
"""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .automata import (
    DiscreteAffine,
    LocationDef,
    ModelError,
    PsaModel,
    PsaNetwork,
    SymRow,
    TransitionDef,
    aff,
    srow,
)
from .geometry import CLOCK, EQ, LE, LT, PARAMETER, SlopeVector, Var
from .rationals import json_number, to_fraction

ZERO = Fraction(0)

DEFAULT_MAX_TASKS = 6
MAX_TASKS_ENV = "RTPTA_MAX_TASKS"

CYCLIC = "cyclic"
IDLE_TIME = "idle_time"

MISS_LOCATION = "DeadlineMissed"
STOP_LOCATION = "Stop"


@dataclass(frozen=True)
class ParamRef:
    """Reference to a declared parameter inside a task field."""

    name: str


Quantity = Union[Fraction, ParamRef]


@dataclass(frozen=True)
class Periodic:
    period: Quantity


@dataclass(frozen=True)
class Sporadic:
    min_interarrival: Quantity


@dataclass(frozen=True)
class ArrivalCurve:
    """Bursty stream: `burst` simultaneous jobs, then one every `period`."""

    burst: Union[int, ParamRef]
    period: Quantity


ActivationSpec = Union[Periodic, Sporadic, ArrivalCurve]


@dataclass(frozen=True)
class TaskSpec:
    name: str
    priority: int  # smaller number = higher priority
    wcet: Quantity
    deadline: Quantity
    activation: ActivationSpec
    offset: Fraction = ZERO


@dataclass(frozen=True)
class ParamDecl:
    name: str
    kind: str  # continuous | discrete
    lo: Fraction
    hi: Fraction
    ref: Fraction


@dataclass(frozen=True)
class JobRecord:
    """One job as the simulator tracks it."""

    task: str
    arrival: Fraction
    demand: Fraction
    deadline: Fraction
    finish: Optional[Fraction] = None

    @property
    def missed(self) -> bool:
        return self.finish is None or self.finish > self.deadline


@dataclass(frozen=True)
class ComponentSpec:
    tasks: Tuple[TaskSpec, ...]
    scheduler_variant: str = IDLE_TIME
    parameters: Tuple[ParamDecl, ...] = ()
    conservative_offsets: bool = False

    def __post_init__(self):
        if self.scheduler_variant not in (CYCLIC, IDLE_TIME):
            raise ModelError(f"unknown scheduler variant {self.scheduler_variant!r}")
        prios = [t.priority for t in self.tasks]
        if len(set(prios)) != len(prios):
            raise ModelError("task priorities must be unique")
        names = [t.name for t in self.tasks]
        if len(set(names)) != len(names):
            raise ModelError("task names must be unique")
        declared = {p.name for p in self.parameters}
        for t in self.tasks:
            for q in (t.wcet, t.deadline, _activation_period(t.activation)):
                if isinstance(q, ParamRef) and q.name not in declared:
                    raise ModelError(f"task {t.name} references undeclared {q.name}")
            act = t.activation
            if isinstance(act, ArrivalCurve) and isinstance(act.burst, ParamRef):
                if act.burst.name not in declared:
                    raise ModelError(
                        f"task {t.name} references undeclared {act.burst.name}"
                    )
        for p in self.parameters:
            if p.kind not in ("continuous", "discrete"):
                raise ModelError(f"parameter {p.name}: bad kind {p.kind!r}")
            if not (p.lo <= p.ref <= p.hi):
                raise ModelError(f"parameter {p.name}: reference outside range")

    def by_priority(self) -> Tuple[TaskSpec, ...]:
        return tuple(sorted(self.tasks, key=lambda t: t.priority))

    def continuous_parameters(self) -> Tuple[ParamDecl, ...]:
        return tuple(p for p in self.parameters if p.kind == "continuous")

    def discrete_parameters(self) -> Tuple[ParamDecl, ...]:
        return tuple(p for p in self.parameters if p.kind == "discrete")

    def reference_point(self) -> Dict[str, Fraction]:
        return {p.name: p.ref for p in self.continuous_parameters()}

    def discrete_reference(self) -> Dict[str, int]:
        out = {}
        for p in self.discrete_parameters():
            if p.ref.denominator != 1:
                raise ModelError(f"discrete parameter {p.name} has fractional ref")
            out[p.name] = int(p.ref)
        return out


def _activation_period(act: ActivationSpec) -> Quantity:
    if isinstance(act, Periodic):
        return act.period
    if isinstance(act, Sporadic):
        return act.min_interarrival
    return act.period


def zero_offset_transform(spec: ComponentSpec) -> ComponentSpec:
    """Copy with all offsets zeroed.

    Schedulability of the transformed set implies schedulability of the
    original, not conversely, so the result is flagged conservative whenever
    an offset was actually dropped.
    """
    changed = any(t.offset != 0 for t in spec.tasks)
    if not changed:
        return spec
    tasks = tuple(replace(t, offset=ZERO) for t in spec.tasks)
    return replace(spec, tasks=tasks, conservative_offsets=True)


# -- JSON component-model file ----------------------------------------------


def _quantity_to_json(q: Quantity):
    if isinstance(q, ParamRef):
        return {"param": q.name}
    return json_number(q)


def _quantity_from_json(data) -> Quantity:
    if isinstance(data, dict):
        if set(data) != {"param"}:
            raise ModelError(f"bad quantity {data!r}")
        return ParamRef(data["param"])
    return to_fraction(data)


def spec_to_json(spec: ComponentSpec) -> dict:
    tasks = []
    for t in spec.tasks:
        act = t.activation
        if isinstance(act, Periodic):
            act_json = {"type": "periodic", "period": _quantity_to_json(act.period)}
        elif isinstance(act, Sporadic):
            act_json = {
                "type": "sporadic",
                "min_interarrival": _quantity_to_json(act.min_interarrival),
            }
        else:
            burst = (
                {"param": act.burst.name}
                if isinstance(act.burst, ParamRef)
                else act.burst
            )
            act_json = {
                "type": "arrival_curve",
                "burst": burst,
                "period": _quantity_to_json(act.period),
            }
        entry = {
            "name": t.name,
            "priority": t.priority,
            "wcet": _quantity_to_json(t.wcet),
            "deadline": _quantity_to_json(t.deadline),
            "activation": act_json,
        }
        if t.offset:
            entry["offset"] = json_number(t.offset)
        tasks.append(entry)
    return {
        "scheduler": {"variant": spec.scheduler_variant},
        "parameters": [
            {
                "name": p.name,
                "kind": p.kind,
                "range": [json_number(p.lo), json_number(p.hi)],
                "ref": json_number(p.ref),
            }
            for p in spec.parameters
        ],
        "tasks": tasks,
    }


def spec_from_json(data: Mapping) -> ComponentSpec:
    try:
        variant = data.get("scheduler", {}).get("variant", IDLE_TIME)
        params = []
        for p in data.get("parameters", []):
            lo, hi = p["range"]
            params.append(
                ParamDecl(
                    name=p["name"],
                    kind=p.get("kind", "continuous"),
                    lo=to_fraction(lo),
                    hi=to_fraction(hi),
                    ref=to_fraction(p["ref"]),
                )
            )
        tasks = []
        for t in data["tasks"]:
            act_data = t["activation"]
            kind = act_data["type"]
            if kind == "periodic":
                act: ActivationSpec = Periodic(_quantity_from_json(act_data["period"]))
            elif kind == "sporadic":
                act = Sporadic(_quantity_from_json(act_data["min_interarrival"]))
            elif kind == "arrival_curve":
                raw_burst = act_data["burst"]
                burst: Union[int, ParamRef]
                if isinstance(raw_burst, dict):
                    burst = ParamRef(raw_burst["param"])
                else:
                    burst = int(raw_burst)
                act = ArrivalCurve(burst, _quantity_from_json(act_data["period"]))
            else:
                raise ModelError(f"unknown activation type {kind!r}")
            tasks.append(
                TaskSpec(
                    name=t["name"],
                    priority=int(t["priority"]),
                    wcet=_quantity_from_json(t["wcet"]),
                    deadline=_quantity_from_json(t["deadline"]),
                    activation=act,
                    offset=to_fraction(t.get("offset", 0)),
                )
            )
        return ComponentSpec(
            tasks=tuple(tasks), scheduler_variant=variant, parameters=tuple(params)
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelError):
            raise
        raise ModelError(f"malformed component model: {exc}") from exc


def load_spec(path: str) -> ComponentSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return spec_from_json(json.load(fh))


# -- automata builders --------------------------------------------------------


class _Ctx:
    """Shared variable context for one component build."""

    def __init__(self, spec: ComponentSpec, discrete: Mapping[str, int]):
        self.spec = spec
        self.params: Dict[str, Var] = {
            p.name: Var(p.name, PARAMETER) for p in spec.continuous_parameters()
        }
        self.discrete = dict(discrete)
        for p in spec.discrete_parameters():
            if p.name not in self.discrete:
                raise ModelError(
                    f"discrete parameter {p.name} needs a concrete value before build"
                )
            val = self.discrete[p.name]
            if not (p.lo <= val <= p.hi):
                raise ModelError(f"discrete parameter {p.name}={val} outside range")

    def quantity(self, q: Quantity):
        """Concrete Fraction, or the parameter Var."""
        if isinstance(q, ParamRef):
            if q.name in self.params:
                return self.params[q.name]
            raise ModelError(f"{q.name} is not a continuous parameter")
        return q

    def burst(self, act: ArrivalCurve) -> int:
        if isinstance(act.burst, ParamRef):
            if act.burst.name not in self.discrete:
                raise ModelError(
                    f"burst parameter {act.burst.name} must be discrete and assigned"
                )
            return int(self.discrete[act.burst.name])
        return int(act.burst)


def _scaled_row(coeff_var: Var, value, rel: str, counter: Optional[str]) -> SymRow:
    """Row ``coeff_var rel (counter *) value`` with value concrete or a Var.

    With counter None: plain ``v rel value``.  With a counter name: the
    multi-instance rows ``c rel N*C``.
    """
    if isinstance(value, Var):
        if counter is None:
            return srow({coeff_var: 1, value: -1}, rel, 0)
        return srow(
            {coeff_var: aff(1), value: DiscreteAffine.of(**{counter: -1})}, rel, 0
        )
    if counter is None:
        return srow({coeff_var: 1}, rel, value)
    return srow({coeff_var: 1}, rel, DiscreteAffine.of(**{counter: value}))


def task_labels(name: str) -> Dict[str, str]:
    return {
        "arrival_event": f"arrival_event_{name}",
        "arrival": f"arrival_{name}",
        "dispatch": f"dispatch_{name}",
        "preemption": f"preemption_{name}",
        "end": f"end_{name}",
        "miss": f"miss_{name}",
        "burst_done": f"burst_done_{name}",
    }


def build_task_automaton(t: TaskSpec, ctx: _Ctx) -> PsaModel:
    """Task behaviour: Idle, committed ActEvent, Waiting, Running, miss sink.

    Clock c accumulates execution (runs only in Running), clock d tracks the
    time since the last arrival and runs everywhere; counter N holds the
    number of simultaneously active jobs.  Completion requires c = N*C; the
    deadline edge needs d >= D with work still pending (c < N*C), so finishing
    exactly at the deadline counts as success.
    """
    lab = task_labels(t.name)
    c = Var(f"c_{t.name}", CLOCK)
    d = Var(f"d_{t.name}", CLOCK)
    n_name = f"N_{t.name}"
    wcet = ctx.quantity(t.wcet)
    deadline = ctx.quantity(t.deadline)

    run_slope = SlopeVector.of({c: 1, d: 1})
    stop_slope = SlopeVector.of({c: 0, d: 1})

    d_le_deadline = _scaled_row(d, deadline, LE, None)
    d_ge_deadline = _neg_row(d_le_deadline)
    c_le_work = _scaled_row(c, wcet, LE, n_name)
    c_eq_work = _scaled_row(c, wcet, EQ, n_name)
    c_lt_work = _scaled_row(c, wcet, LT, n_name)

    locations = (
        LocationDef("Idle", (), stop_slope),
        LocationDef("ActEvent", (), stop_slope, committed=True),
        LocationDef("Waiting", (d_le_deadline,), stop_slope),
        LocationDef("Running", (d_le_deadline, c_le_work), run_slope),
        # committed so the whole network freezes at the first miss: every
        # verdict only needs reachability of this location
        LocationDef(MISS_LOCATION, (), stop_slope, committed=True),
    )
    bump = ((n_name, DiscreteAffine.of(1, **{n_name: 1})),)
    # the in-service self-loops require pending work (c < N*C): a task at its
    # completion frontier completes first and takes the fresh arrival through
    # Idle at the same instant, mirroring the completions-before-arrivals tie
    # rule instead of letting the arrival mask the completion
    transitions = (
        TransitionDef(
            "Idle",
            (),
            lab["arrival_event"],
            frozenset({d}),
            ((n_name, aff(1)),),
            "ActEvent",
        ),
        TransitionDef("ActEvent", (), lab["arrival"], frozenset(), (), "Waiting"),
        TransitionDef("Waiting", (), lab["dispatch"], frozenset(), (), "Running"),
        TransitionDef("Running", (), lab["preemption"], frozenset(), (), "Waiting"),
        TransitionDef(
            "Waiting", (c_lt_work,), lab["arrival_event"], frozenset({d}), bump, "Waiting"
        ),
        TransitionDef(
            "Running", (c_lt_work,), lab["arrival_event"], frozenset({d}), bump, "Running"
        ),
        TransitionDef(
            "Running",
            (c_eq_work,),
            lab["end"],
            frozenset({c}),
            ((n_name, aff(0)),),
            "Idle",
        ),
        TransitionDef(
            "Waiting", (d_ge_deadline, c_lt_work), lab["miss"], frozenset(), (), MISS_LOCATION
        ),
        TransitionDef(
            "Running", (d_ge_deadline, c_lt_work), lab["miss"], frozenset(), (), MISS_LOCATION
        ),
    )
    params = frozenset(q for q in (wcet, deadline) if isinstance(q, Var))
    return PsaModel(
        name=f"task_{t.name}",
        locations=locations,
        initial_location="Idle",
        clocks=frozenset({c, d}),
        parameters=params,
        transitions=transitions,
        discrete_inits=((n_name, 0),),
    )


def _neg_row(row: SymRow) -> SymRow:
    """<= row flipped to >= (kept in <= form with negated sides)."""
    return SymRow(
        tuple((v, a.scale(Fraction(-1))) for v, a in row.terms),
        row.rel,
        row.rhs.scale(Fraction(-1)),
    )


def _emit_loop(x: Var, period, label: str) -> Tuple[LocationDef, TransitionDef]:
    """The steady periodic stage: invariant x <= T, emit and reset at x = T."""
    inv = _scaled_row(x, period, LE, None)
    guard = _scaled_row(x, period, EQ, None)
    loc = LocationDef("Run", (inv,), SlopeVector.of({x: 1}))
    tr = TransitionDef("Run", (guard,), label, frozenset({x}), (), "Run")
    return loc, tr


def build_periodic_activation(
    t: TaskSpec, ctx: _Ctx, critical_instant: bool
) -> PsaModel:
    """Job source of a periodic task.

    Critical-instant variant: first job at time zero regardless of offset,
    then exactly every period.  Cyclic variant honours the offset for the
    first emission and then emits every period.
    """
    if not isinstance(t.activation, Periodic):
        raise ModelError(f"{t.name}: not periodic")
    lab = task_labels(t.name)["arrival_event"]
    x = Var(f"x_{t.name}", CLOCK)
    period = ctx.quantity(t.activation.period)
    run_loc, run_tr = _emit_loop(x, period, lab)
    offset = ZERO if critical_instant else t.offset
    if offset == 0:
        locations = (
            LocationDef("Emit0", (), SlopeVector.of({x: 1}), committed=True),
            run_loc,
        )
        first = TransitionDef("Emit0", (), lab, frozenset({x}), (), "Run")
    else:
        inv = _scaled_row(x, offset, LE, None)
        guard = _scaled_row(x, offset, EQ, None)
        locations = (
            LocationDef("Phase", (inv,), SlopeVector.of({x: 1})),
            run_loc,
        )
        first = TransitionDef("Phase", (guard,), lab, frozenset({x}), (), "Run")
    params = frozenset(q for q in (period,) if isinstance(q, Var))
    return PsaModel(
        name=f"activation_{t.name}",
        locations=locations,
        initial_location=locations[0].id,
        clocks=frozenset({x}),
        parameters=params,
        transitions=(first, run_tr),
    )


def build_sporadic_activation(
    t: TaskSpec, ctx: _Ctx, critical_instant: bool
) -> PsaModel:
    """Sporadic source: emissions at least min_interarrival apart.

    The critical-instant variant pins emissions to the earliest allowed
    instants (x = T), which makes it trace-equivalent to the periodic one.
    """
    if not isinstance(t.activation, Sporadic):
        raise ModelError(f"{t.name}: not sporadic")
    lab = task_labels(t.name)["arrival_event"]
    x = Var(f"x_{t.name}", CLOCK)
    period = ctx.quantity(t.activation.min_interarrival)
    if critical_instant:
        run_loc, run_tr = _emit_loop(x, period, lab)
    else:
        lower = _neg_row(_scaled_row(x, period, LE, None))  # x >= T
        run_loc = LocationDef("Run", (), SlopeVector.of({x: 1}))
        run_tr = TransitionDef("Run", (lower,), lab, frozenset({x}), (), "Run")
    locations = (
        LocationDef("Emit0", (), SlopeVector.of({x: 1}), committed=True),
        run_loc,
    )
    first = TransitionDef("Emit0", (), lab, frozenset({x}), (), "Run")
    params = frozenset(q for q in (period,) if isinstance(q, Var))
    return PsaModel(
        name=f"activation_{t.name}",
        locations=locations,
        initial_location="Emit0",
        clocks=frozenset({x}),
        parameters=params,
        transitions=(first, run_tr),
    )


def build_arrival_curve_activation(t: TaskSpec, ctx: _Ctx) -> PsaModel:
    """Bursty source: `burst` jobs within zero time, then one every period."""
    if not isinstance(t.activation, ArrivalCurve):
        raise ModelError(f"{t.name}: not an arrival curve")
    labels = task_labels(t.name)
    burst = ctx.burst(t.activation)
    if burst < 1:
        raise ModelError(f"{t.name}: burst must be >= 1")
    x = Var(f"x_{t.name}", CLOCK)
    n_name = f"n_{t.name}"
    period = ctx.quantity(t.activation.period)
    run_loc, run_tr = _emit_loop(x, period, labels["arrival_event"])
    locations = (
        LocationDef("Bursting", (), SlopeVector.of({x: 1}), committed=True),
        run_loc,
    )
    # counter-only guards: n < burst to keep emitting, n = burst to move on
    emit_guard = (SymRow((), LT, DiscreteAffine.of(burst, **{n_name: -1})),)
    done_guard = (SymRow((), EQ, DiscreteAffine.of(burst, **{n_name: -1})),)
    transitions = (
        TransitionDef(
            "Bursting",
            emit_guard,
            labels["arrival_event"],
            frozenset(),
            ((n_name, DiscreteAffine.of(1, **{n_name: 1})),),
            "Bursting",
        ),
        TransitionDef(
            "Bursting", done_guard, labels["burst_done"], frozenset({x}), (), "Run"
        ),
        run_tr,
    )
    params = frozenset(q for q in (period,) if isinstance(q, Var))
    return PsaModel(
        name=f"activation_{t.name}",
        locations=locations,
        initial_location="Bursting",
        clocks=frozenset({x}),
        parameters=params,
        transitions=transitions,
        discrete_inits=((n_name, 0),),
    )


def build_activation(t: TaskSpec, ctx: _Ctx, critical_instant: bool) -> PsaModel:
    act = t.activation
    if isinstance(act, Periodic):
        return build_periodic_activation(t, ctx, critical_instant)
    if isinstance(act, Sporadic):
        return build_sporadic_activation(t, ctx, critical_instant)
    return build_arrival_curve_activation(t, ctx)


def max_tasks() -> int:
    raw = os.environ.get(MAX_TASKS_ENV)
    if raw is None:
        return DEFAULT_MAX_TASKS
    return int(raw)


def _stable_name(running: Optional[str], pending: Tuple[str, ...]) -> str:
    if running is None and not pending:
        return "Idle"
    parts = []
    if running is not None:
        parts.append(f"Rt{running}")
    parts.extend(f"Wt{p}" for p in pending)
    return "".join(parts)


def build_fpps_scheduler(tasks: Sequence[TaskSpec], variant: str) -> PsaModel:
    """Fixed-priority preemptive scheduler, generated from the state space.

    Stable locations encode (running task, waiting set); committed At/Pt/Et
    locations resolve each arrival or completion in zero time: dispatch when
    the processor is free, preempt-then-dispatch when the newcomer beats the
    running task, queue otherwise; after a completion the best waiting task
    is dispatched, and with nothing left the idle_time variant halts in Stop.
    """
    if not 1 <= len(tasks) <= max_tasks():
        raise ModelError(
            f"scheduler supports 1..{max_tasks()} tasks (set {MAX_TASKS_ENV} to raise)"
        )
    order = sorted(tasks, key=lambda t: t.priority)
    names = [t.name for t in order]
    prio = {t.name: t.priority for t in order}
    labels = {n: task_labels(n) for n in names}

    locations: Dict[str, LocationDef] = {}
    transitions: List[TransitionDef] = []

    def add_loc(loc_id: str, committed: bool) -> str:
        if loc_id not in locations:
            locations[loc_id] = LocationDef(
                loc_id, (), SlopeVector(()), committed=committed
            )
        return loc_id

    def hop(source: str, label: str, target: str) -> None:
        transitions.append(
            TransitionDef(source, (), label, frozenset(), (), target)
        )

    stable: List[Tuple[Optional[str], Tuple[str, ...]]] = []
    for r in range(len(names) + 1):
        for waiting in itertools.combinations(names, r):
            stable.append((None, waiting))
            for run in names:
                if run not in waiting:
                    stable.append((run, waiting))
    # states with idle processor but waiting tasks are unreachable; keep the
    # generator simple and only materialize locations actually targeted
    for running, pending in stable:
        if running is None and pending:
            continue
        add_loc(_stable_name(running, pending), committed=False)

    for running, pending in stable:
        if running is None and pending:
            continue
        src = _stable_name(running, pending)
        others = [n for n in names if n != running and n not in pending]
        # arrivals
        for n in others:
            at = add_loc(f"At{n}|{src}", committed=True)
            hop(src, labels[n]["arrival"], at)
            if running is None:
                hop(at, labels[n]["dispatch"], _stable_name(n, pending))
            elif prio[n] < prio[running]:
                pt = add_loc(f"Pt{running}At{n}|{src}", committed=True)
                hop(at, labels[running]["preemption"], pt)
                new_pending = tuple(sorted(pending + (running,)))
                hop(pt, labels[n]["dispatch"], _stable_name(n, new_pending))
            else:
                new_pending = tuple(sorted(pending + (n,)))
                hop(at, "sched_queue", _stable_name(running, new_pending))
        # completion of the running task; Et outgoing hops are added once,
        # the Et location is shared across all running tasks with the same
        # waiting set
        if running is not None:
            et_id = f"Et|{_stable_name(None, pending)}"
            fresh = et_id not in locations
            et = add_loc(et_id, committed=True)
            hop(src, labels[running]["end"], et)
            if not fresh:
                continue
            if pending:
                best = min(pending, key=lambda n: prio[n])
                rest = tuple(p for p in pending if p != best)
                hop(et, labels[best]["dispatch"], _stable_name(best, rest))
            elif variant == IDLE_TIME:
                stop = add_loc(STOP_LOCATION, committed=True)
                hop(et, "sched_stop", stop)
            else:
                hop(et, "sched_idle", _stable_name(None, ()))

    # the scheduler owns the whole task interface: declaring a label with no
    # edge (e.g. preemption of the top-priority task) blocks it network-wide
    interface = frozenset(
        labels[n][kind]
        for n in names
        for kind in ("arrival", "dispatch", "preemption", "end")
    )
    return PsaModel(
        name="scheduler",
        locations=tuple(locations.values()),
        initial_location="Idle",
        clocks=frozenset(),
        parameters=frozenset(),
        transitions=tuple(transitions),
        declared_actions=interface,
    )


def build_analysis_window(horizon: Fraction) -> PsaModel:
    """Observer that ends the analysis after a fixed amount of time.

    A cyclic component never quiesces, so bounded synthesis explores one
    window (typically the reference point's hyperperiod, after which a
    synchronous periodic schedule repeats).  The observer emits an explicit
    boundary event and then freezes the network, which anchors window-edge
    releases in the constraints instead of leaving them open.
    """
    x = Var("x_window", CLOCK)
    inv = _scaled_row(x, horizon, LE, None)
    guard = _scaled_row(x, horizon, EQ, None)
    return PsaModel(
        name="window",
        locations=(
            LocationDef("Within", (inv,), SlopeVector.of({x: 1})),
            LocationDef("Expired", (), SlopeVector.of({x: 1}), committed=True),
        ),
        initial_location="Within",
        clocks=frozenset({x}),
        parameters=frozenset(),
        transitions=(
            TransitionDef("Within", (guard,), "window_end", frozenset(), (), "Expired"),
        ),
    )


def build_component(
    spec: ComponentSpec,
    discrete: Optional[Mapping[str, int]] = None,
    with_time_clock: bool = False,
    analysis_window: Optional[Fraction] = None,
) -> PsaNetwork:
    """Compose task + activation automata and the scheduler into one network.

    idle_time components use critical-instant activations (first release at
    time zero, subsequent releases as early as allowed).  The declared
    parameter ranges become the network's initial parameter constraint.
    Discrete parameters (arrival-curve bursts) must be given concrete values.
    ``analysis_window`` adds the bounded-exploration observer (cyclic models).
    """
    ctx = _Ctx(spec, discrete or {})
    order = spec.by_priority()
    critical = spec.scheduler_variant == IDLE_TIME
    tasks = [build_task_automaton(t, ctx) for t in order]
    activations = [build_activation(t, ctx, critical) for t in order]
    scheduler = build_fpps_scheduler(order, spec.scheduler_variant)
    range_rows = []
    for p in spec.continuous_parameters():
        v = ctx.params[p.name]
        range_rows.append(srow({v: -1}, LE, -p.lo))
        range_rows.append(srow({v: 1}, LE, p.hi))
    scheduler = replace(
        scheduler,
        parameters=frozenset(ctx.params.values()),
        initial_constraint=tuple(range_rows),
    )
    automata = tasks + activations + [scheduler]
    if analysis_window is not None:
        automata.append(build_analysis_window(Fraction(analysis_window)))
    time_var = Var("_time", CLOCK) if with_time_clock else None
    return PsaNetwork(automata, time_var=time_var)


# -- canonical event ordering -------------------------------------------------

_RANK_PREFIXES = (
    ("end_", 0),
    ("miss_", 1),
    ("arrival_event_", 2),
    ("arrival_", 3),
    ("burst_done_", 4),
    ("sched_queue", 5),
    ("preemption_", 6),
    ("dispatch_", 7),
    ("sched_idle", 8),
    ("sched_stop", 8),
)


def label_rank(label: str) -> Tuple[int, str]:
    """Order for simultaneous events: completions, misses, arrivals, then
    scheduling; ties are resolved upstream by automaton (priority) order."""
    for prefix, rank in _RANK_PREFIXES:
        if label.startswith(prefix):
            return (rank, label)
    return (9, label)


def label_event(label: str) -> Optional[Tuple[str, str]]:
    """Map a network label to the observable (kind, task) event, if any.

    Scheduler handshakes (arrival_x between task and scheduler, queue hops,
    burst bookkeeping) are internal; the activation's arrival_event carries
    the observable arrival.
    """
    if label.startswith("arrival_event_"):
        return ("arrival", label[len("arrival_event_"):])
    if label.startswith("dispatch_"):
        return ("dispatch", label[len("dispatch_"):])
    if label.startswith("preemption_"):
        return ("preemption", label[len("preemption_"):])
    if label.startswith("end_"):
        return ("end", label[len("end_"):])
    if label.startswith("miss_"):
        return ("deadline_miss", label[len("miss_"):])
    if label in ("sched_stop", "sched_idle"):
        return ("idle", "")
    return None
