"""Analysis service: stateless HTTP endpoints over the core package.

Every endpoint takes the component model inline, computes, and returns the
full result; nothing is stored server-side, so results are reproducible and
the service scales by replication.  The CLI drives these endpoints through
an in-process ASGI transport by default and over the network with --server.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Mapping, Optional, Tuple

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from .. import automata as am
from .. import geometry as geo
from .. import interfaces as ifc
from .. import simulator as sim
from .. import synthesis as syn
from .. import validation as val
from ..automata import ModelError
from ..components import (
    ArrivalCurve,
    ComponentSpec,
    ParamRef,
    build_component,
    spec_from_json,
)
from ..rationals import json_number, to_fraction
from . import schemas


class UsageError(ValueError):
    """Bad invocation input (maps to CLI exit 64)."""


app = FastAPI(
    title="rtpta analysis service",
    description="Parametric schedulability analysis of real-time components",
    version=__version__,
)


@app.exception_handler(UsageError)
async def _usage_handler(request: Request, exc: UsageError):
    return JSONResponse(
        status_code=400, content={"code": "usage", "message": str(exc)}
    )


@app.exception_handler(ModelError)
async def _model_handler(request: Request, exc: ModelError):
    return JSONResponse(
        status_code=422, content={"code": "model", "message": str(exc)}
    )


@app.exception_handler(geo.GeometryError)
async def _geometry_handler(request: Request, exc: geo.GeometryError):
    return JSONResponse(
        status_code=422, content={"code": "model", "message": str(exc)}
    )


def _spec(model: schemas.ComponentModel) -> ComponentSpec:
    return spec_from_json(model.model_dump(mode="python"))


def _parse_value(name: str, raw) -> Fraction:
    try:
        return to_fraction(raw)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad value for {name}: {exc}") from exc


def _full_point(
    spec: ComponentSpec, at: Mapping[str, object]
) -> Dict[str, Fraction]:
    """Reference values overridden by --at pairs; all names must be declared."""
    declared = {p.name: p for p in spec.parameters}
    point = {p.name: p.ref for p in spec.parameters}
    for name, raw in at.items():
        if name not in declared:
            raise UsageError(f"parameter {name!r} is not declared by the model")
        point[name] = _parse_value(name, raw)
    for p in spec.discrete_parameters():
        if point[p.name].denominator != 1:
            raise UsageError(f"discrete parameter {p.name} needs an integer value")
    return point


def _split_point(
    spec: ComponentSpec, point: Mapping[str, Fraction]
) -> Tuple[Dict[str, Fraction], Dict[str, int]]:
    discrete = {p.name: int(point[p.name]) for p in spec.discrete_parameters()}
    continuous = {
        p.name: point[p.name] for p in spec.continuous_parameters()
    }
    return continuous, discrete


def _box(
    spec: ComponentSpec, raw: Optional[Mapping[str, list]]
) -> Dict[str, Tuple[Fraction, Fraction]]:
    declared = {p.name: p for p in spec.continuous_parameters()}
    if raw is None:
        return {n: (p.lo, p.hi) for n, p in declared.items()}
    box = {}
    for name, pair in raw.items():
        if name not in declared:
            raise UsageError(f"box parameter {name!r} is not declared")
        lo, hi = (_parse_value(name, pair[0]), _parse_value(name, pair[1]))
        if lo > hi:
            raise UsageError(f"empty box for {name}: {lo} > {hi}")
        decl = declared[name]
        if lo < decl.lo or hi > decl.hi:
            raise UsageError(
                f"box for {name} exceeds the declared range "
                f"[{decl.lo}, {decl.hi}]"
            )
        box[name] = (lo, hi)
    for name, p in declared.items():
        box.setdefault(name, (p.lo, p.hi))
    return box


def _step(raw) -> object:
    if isinstance(raw, dict):
        out = {}
        for name, v in raw.items():
            s = _parse_value(f"step[{name}]", v)
            if s <= 0:
                raise UsageError("step must be positive")
            out[name] = s
        return out
    s = _parse_value("step", raw)
    if s <= 0:
        raise UsageError("step must be positive")
    return s


def _analysis_window(spec: ComponentSpec, point: Mapping[str, Fraction]):
    """Cyclic components are explored for one hyperperiod of the reference
    point; idle_time components quiesce on their own."""
    if spec.scheduler_variant != "cyclic":
        return None
    try:
        return sim.hyperperiod(spec, point)
    except sim.SimulationError:
        return None


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/check", response_model=schemas.CheckResponse)
def check(req: schemas.CheckRequest) -> schemas.CheckResponse:
    """Oracle verdict plus automata-model verdict, cross-validated."""
    spec = _spec(req.model)
    point = _full_point(spec, req.at)
    ok, worst = sim.is_schedulable(spec, point)
    busy = sim.busy_period_length(spec, point)
    symbolic = val.symbolic_verdict(
        spec, point, depth_bound=req.depth or 600
    )
    report = val.compare_events(spec, point)
    consistent = report.ok and (
        (symbolic == syn.SCHEDULABLE) == ok
    )
    return schemas.CheckResponse(
        verdict="schedulable" if ok else "unschedulable",
        busy_period_end=None if busy is None else json_number(busy),
        utilization=json_number(sim.utilization(spec, point)),
        worst_response={
            t: (None if r is None else json_number(r))
            for t, r in sorted(worst.items())
        },
        symbolic_verdict=symbolic,
        consistency="ok" if consistent else "mismatch",
        consistency_detail="" if consistent else report.detail or "verdicts differ",
    )


@app.post("/simulate", response_model=schemas.SimulateResponse)
def simulate(req: schemas.SimulateRequest) -> schemas.SimulateResponse:
    spec = _spec(req.model)
    point = _full_point(spec, req.at)
    horizon = None if req.horizon is None else _parse_value("horizon", req.horizon)
    if req.honor_offsets:
        result = sim.simulate_with_offsets(spec, point)
    else:
        if sim.utilization(spec, point) >= 1 and horizon is None:
            raise UsageError(
                "utilization >= 1: pass a horizon to bound the simulation"
            )
        scale = (
            Fraction(1)
            if req.demand_scale is None
            else _parse_value("demand_scale", req.demand_scale)
        )
        result = sim.simulate(spec, point, horizon=horizon, demand_scale=scale)
    payload = sim.result_to_json(result)
    trace = sim.log_to_tsv(result.log) if req.trace else None
    gantt = sim.gantt_segments(result.log) if req.trace else None
    return schemas.SimulateResponse(result=payload, trace_tsv=trace, gantt=gantt)


@app.post("/analyze", response_model=schemas.AnalyzeResponse)
def analyze(req: schemas.AnalyzeRequest) -> schemas.AnalyzeResponse:
    """Inverse method at a reference point."""
    spec = _spec(req.model)
    point = _full_point(spec, req.at)
    continuous, discrete = _split_point(spec, point)
    window = _analysis_window(spec, point)
    net = build_component(spec, discrete=discrete, analysis_window=window)
    var_point = am.resolve_point(net, continuous)
    if not geo.satisfies(net.initial_k(), var_point):
        raise UsageError("reference point lies outside the declared ranges")
    res = syn.inverse_method(net, var_point, depth_bound=req.depth)
    return schemas.AnalyzeResponse(
        constraint=geo.format_polyhedron(res.constraint),
        constraint_json=geo.polyhedron_to_json(res.constraint),
        reached_fixpoint=res.reached_fixpoint,
        explored_states=res.explored_states,
        restarts=res.restarts,
        negations=[str(j) for j in res.incompatible_negations],
        window=None if window is None else json_number(window),
    )


@app.post("/cartography", response_model=schemas.CartographyResponse)
def cartography(req: schemas.CartographyRequest) -> schemas.CartographyResponse:
    spec = _spec(req.model)
    box = _box(spec, req.box)
    step = _step(req.step)
    discrete: Dict[str, int] = {}
    for p in spec.discrete_parameters():
        raw = req.discrete.get(p.name, p.ref)
        v = _parse_value(p.name, raw)
        if v.denominator != 1:
            raise UsageError(f"discrete parameter {p.name} needs an integer")
        discrete[p.name] = int(v)
    net = build_component(spec, discrete=discrete)
    carto = syn.cartography(
        net,
        box,
        step,
        depth_bound=req.depth,
        discrete_assignment=discrete,
        jobs=max(1, req.jobs),
    )
    sched = sum(1 for _, v in carto.grid if v == syn.SCHEDULABLE)
    return schemas.CartographyResponse(
        tiles=[syn.tile_to_json(t) for t in carto.tiles],
        uncovered_points=[
            {n: json_number(v) for n, v in sorted(p.items())}
            for p in carto.uncovered_points
        ],
        grid_csv=syn.grid_to_csv(carto),
        schedulable_points=sched,
        total_points=len(carto.grid),
    )


@app.post("/interface", response_model=schemas.InterfaceResponse)
def interface(req: schemas.InterfaceRequest) -> schemas.InterfaceResponse:
    spec = _spec(req.model)
    task = ifc.interface_task(spec)  # raises InterfaceError -> 422
    request_name = (
        task.activation.period.name
        if isinstance(task.activation.period, ParamRef)
        else None
    )
    response_name = task.deadline.name
    if request_name is None:
        raise ModelError("interface task needs a parametric period")
    declared = {p.name: p for p in spec.parameters}
    if req.discrete is None:
        ranges = {
            p.name: (int(p.lo), int(p.hi)) for p in spec.discrete_parameters()
        }
    else:
        ranges = {}
        for name, pair in req.discrete.items():
            if name not in declared:
                raise UsageError(f"discrete parameter {name!r} is not declared")
            lo, hi = int(_parse_value(name, pair[0])), int(
                _parse_value(name, pair[1])
            )
            if lo > hi:
                raise UsageError(f"empty discrete range for {name}")
            ranges[name] = (lo, hi)
    if not ranges:
        raise ModelError("no discrete interface parameters to enumerate")
    box_all = _box(spec, req.box)
    box = {
        n: box_all[n]
        for n in (request_name, response_name)
        if n in box_all
    }
    if req.step is None:
        lo, hi = box[response_name]
        step: object = {
            request_name: Fraction(1),
            response_name: max(Fraction(1), (hi - lo) / 4),
        }
    else:
        step = _step(req.step)
    doc = ifc.synthesize_interface(
        spec,
        discrete_ranges=ranges,
        box=box,
        step=step,
        depth_bound=req.depth,
        jobs=max(1, req.jobs),
        integer_endpoints=req.integer_endpoints,
        component_name=req.component_name,
    )
    feasible = sum(1 for r in doc.rows if r.feasible)
    return schemas.InterfaceResponse(
        doc=ifc.doc_to_json(doc),
        table=ifc.doc_to_table(doc),
        feasible_rows=feasible,
    )
