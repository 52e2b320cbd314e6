"""Request/response models of the analysis service.

The component model mirrors the on-disk JSON format; numeric fields accept
integers, decimal strings, or ``"p/q"`` strings so exact rationals survive
the wire.  Responses carry rationals in the same string forms.
"""

from __future__ import annotations

from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

Number = Union[int, str]


class ParamField(BaseModel):
    model_config = ConfigDict(extra="forbid")
    param: str


Quantity = Union[Number, ParamField]


class PeriodicActivation(BaseModel):
    model_config = ConfigDict(extra="forbid")
    type: Literal["periodic"]
    period: Quantity


class SporadicActivation(BaseModel):
    model_config = ConfigDict(extra="forbid")
    type: Literal["sporadic"]
    min_interarrival: Quantity


class ArrivalCurveActivation(BaseModel):
    model_config = ConfigDict(extra="forbid")
    type: Literal["arrival_curve"]
    burst: Union[int, ParamField]
    period: Quantity


Activation = Union[PeriodicActivation, SporadicActivation, ArrivalCurveActivation]


class TaskModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    name: str
    priority: int
    wcet: Quantity
    deadline: Quantity
    activation: Activation
    offset: Number = 0


class ParameterModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    name: str
    kind: Literal["continuous", "discrete"] = "continuous"
    range: List[Number] = Field(min_length=2, max_length=2)
    ref: Number


class SchedulerModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    variant: Literal["cyclic", "idle_time"] = "idle_time"


class ComponentModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    scheduler: SchedulerModel = SchedulerModel(variant="idle_time")
    parameters: List[ParameterModel] = []
    tasks: List[TaskModel]


Assignment = Dict[str, Number]
RangeMap = Dict[str, List[Number]]
StepValue = Union[Number, Dict[str, Number]]


class CheckRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    model: ComponentModel
    at: Assignment = {}
    depth: Optional[int] = None


class CheckResponse(BaseModel):
    verdict: Literal["schedulable", "unschedulable"]
    busy_period_end: Optional[Number]
    utilization: Number
    worst_response: Dict[str, Optional[Number]]
    symbolic_verdict: str
    consistency: Literal["ok", "mismatch"]
    consistency_detail: str = ""


class SimulateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    model: ComponentModel
    at: Assignment = {}
    horizon: Optional[Number] = None
    trace: bool = False
    honor_offsets: bool = False
    demand_scale: Optional[Number] = None


class SimulateResponse(BaseModel):
    result: dict
    trace_tsv: Optional[str] = None
    gantt: Optional[List[dict]] = None


class AnalyzeRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    model: ComponentModel
    at: Assignment = {}
    depth: Optional[int] = None


class AnalyzeResponse(BaseModel):
    constraint: str
    constraint_json: object
    reached_fixpoint: bool
    explored_states: int
    restarts: int
    negations: List[str]
    window: Optional[Number] = None


class CartographyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    model: ComponentModel
    box: Optional[RangeMap] = None
    step: StepValue = 1
    depth: Optional[int] = None
    discrete: Assignment = {}
    jobs: int = 1


class CartographyResponse(BaseModel):
    tiles: List[dict]
    uncovered_points: List[Dict[str, Number]]
    grid_csv: str
    schedulable_points: int
    total_points: int


class InterfaceRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    model: ComponentModel
    discrete: Optional[RangeMap] = None
    box: Optional[RangeMap] = None
    step: Optional[StepValue] = None
    depth: Optional[int] = None
    jobs: int = 1
    integer_endpoints: bool = True
    component_name: str = "component"


class InterfaceResponse(BaseModel):
    doc: dict
    table: str
    feasible_rows: int


class HealthResponse(BaseModel):
    status: Literal["ok"]
    version: str


class ErrorBody(BaseModel):
    code: Literal["usage", "model", "internal"]
    message: str
