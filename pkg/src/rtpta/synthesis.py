"""Parameter synthesis: the inverse method and behavioral cartography.

The inverse method explores the symbolic state space under the current
parameter constraint K; whenever a reached state excludes the reference
point, one violated inequality of its parameter projection is negated into
K and the exploration restarts from scratch.  On fixpoint the meet of all
reached states' parameter projections is returned: a region whose points all
exhibit the reference point's time-abstract traces.

Cartography sweeps a parameter box on a grid, skipping points already
covered by a tile, and labels each tile with the concrete verdict at its
reference point.  Non-converging runs (the method is a semi-algorithm)
surface as depth_exceeded tiles whose grid points stay uncovered and are
then classified pointwise.
"""

from __future__ import annotations

import concurrent.futures
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from . import geometry as geo
from .automata import (
    ModelError,
    PsaNetwork,
    SymbolicState,
    bounded_explore,
    concrete_instantiate,
    enabled_syncs,
    initial_state,
    project_params,
    successor,
)
from .components import (
    MISS_LOCATION,
    ArrivalCurve,
    ComponentSpec,
    ParamRef,
    Periodic,
    Sporadic,
)
from .geometry import EQ, Inequality, Polyhedron, Var
from .rationals import ceil_div, json_number, rational_lcm

ZERO = Fraction(0)
ONE = Fraction(1)

SCHEDULABLE = "schedulable"
DEADLINE_MISS = "deadline_miss"
DEPTH_EXCEEDED = "depth_exceeded"

DEFAULT_DEPTH = 400
DEFAULT_MAX_STATES = 4000


class SynthesisError(ModelError):
    pass


@dataclass
class ImResult:
    constraint: Polyhedron
    reached_fixpoint: bool
    explored_states: int
    incompatible_negations: List[Inequality]
    restarts: int


@dataclass
class Tile:
    region: Polyhedron
    discrete_assignment: Dict[str, int]
    verdict: str
    witness_point: Dict[str, Fraction]


@dataclass
class Cartography:
    box: Dict[str, Tuple[Fraction, Fraction]]
    step: object  # Fraction or per-parameter mapping
    tiles: List[Tile]
    uncovered_points: List[Dict[str, Fraction]]
    grid: List[Tuple[Dict[str, Fraction], str]]


def select_incompatible(
    proj: Polyhedron, point: Mapping[Var, Fraction]
) -> Inequality:
    """First violated inequality in canonical order; equalities are split and
    the violated side returned, so the caller can always negate."""
    for row in proj.inequalities:
        if row.rel == EQ:
            for side in geo.equality_sides(row):
                if not side.evaluate(point):
                    return side
            continue
        if not row.evaluate(point):
            return row
    raise SynthesisError("projection is compatible with the reference point")


def _explore_compatible(
    net: PsaNetwork,
    k: Polyhedron,
    point: Mapping[Var, Fraction],
    depth: int,
    max_states: int,
) -> Tuple[Optional[Polyhedron], List[SymbolicState], bool]:
    """One exploration round under K.

    Returns (incompatible_projection, states, truncated): the projection is
    non-None as soon as a reached state excludes the reference point, and the
    exploration aborts there for the restart.
    """
    states: List[SymbolicState] = []
    buckets: Dict[Tuple, List[int]] = {}

    def register(state: SymbolicState) -> Optional[int]:
        bucket = buckets.setdefault(state.key(), [])
        for idx in bucket:
            if geo.includes(states[idx].zone, state.zone):
                return None
        idx = len(states)
        states.append(state)
        bucket.append(idx)
        return idx

    init = initial_state(net, k)
    register(init)
    if not geo.substitute(init.zone, point).is_empty():
        incompatible = None
    else:
        return project_params(net, init), states, False
    frontier = [0]
    level = 0
    truncated = False
    while frontier:
        if level >= depth or len(states) > max_states:
            truncated = True
            break
        level += 1
        nxt: List[int] = []
        for idx in frontier:
            state = states[idx]
            for combo in enabled_syncs(net, state):
                child = successor(net, state, combo)
                if child is None:
                    continue
                new_idx = register(child)
                if new_idx is None:
                    continue
                if geo.substitute(child.zone, point).is_empty():
                    return project_params(net, child), states, False
                nxt.append(new_idx)
        frontier = nxt
    return None, states, truncated


def inverse_method(
    net: PsaNetwork,
    point: Mapping[Var, Fraction],
    depth_bound: Optional[int] = None,
    max_states: int = DEFAULT_MAX_STATES,
) -> ImResult:
    """Synthesize the trace-preserving parameter region around a point.

    Semi-algorithm: with a depth bound it may stop early, in which case
    reached_fixpoint is False and the returned region is only the constraint
    accumulated so far (usable as verdict material, never as a tile).
    """
    k = net.initial_k()
    if not geo.satisfies(k, point):
        raise SynthesisError("reference point violates the initial constraint")
    depth = depth_bound if depth_bound is not None else DEFAULT_DEPTH
    negations: List[Inequality] = []
    restarts = 0
    explored = 0
    while True:
        proj, states, truncated = _explore_compatible(
            net, k, point, depth, max_states
        )
        explored += len(states)
        if proj is not None:
            j = select_incompatible(proj, point)
            neg = geo.negate(j)
            new_k = geo.meet_rows(k, [neg], minimize=True)
            if not geo.satisfies(new_k, point):
                raise SynthesisError("negation removed the reference point")
            if geo.includes(new_k, k):
                raise SynthesisError("negation failed to shrink the constraint")
            negations.append(j)
            k = new_k
            restarts += 1
            continue
        if truncated:
            return ImResult(k, False, explored, negations, restarts)
        acc = k
        for state in states:
            acc = geo.meet(acc, project_params(net, state))
        acc = geo.remove_redundancy(acc)
        return ImResult(acc, True, explored, negations, restarts)


def classify_point(
    net: PsaNetwork,
    point: Mapping[Var, Fraction],
    bad_locations: Iterable[str] = (MISS_LOCATION,),
    depth_bound: int = DEFAULT_DEPTH,
    max_states: int = 20000,
) -> str:
    """Concrete reachability verdict at one parameter point."""
    bad = frozenset(bad_locations)
    cnet = concrete_instantiate(net, point)
    k = cnet.initial_k()
    if k._explicit_empty:
        raise SynthesisError("point violates the declared parameter ranges")

    def hit(state: SymbolicState) -> bool:
        return any(loc in bad for loc in state.locations)

    result = bounded_explore(cnet, k, depth_bound, halt_on=hit, max_states=max_states)
    if result.halted_at is not None:
        return DEADLINE_MISS
    if result.truncated:
        return DEPTH_EXCEEDED
    return SCHEDULABLE


StepSpec = object  # Fraction or per-parameter mapping


def _step_for(step, name: str) -> Fraction:
    if isinstance(step, Mapping):
        return Fraction(step[name])
    return Fraction(step)


def grid_points(
    box: Mapping[str, Tuple[Fraction, Fraction]], step
) -> List[Dict[str, Fraction]]:
    """Row-major grid: parameters in sorted name order, last varying fastest.

    ``step`` is one granularity for every axis or a per-parameter mapping.
    """
    names = sorted(box)
    axes: List[List[Fraction]] = []
    for name in names:
        s = _step_for(step, name)
        if s <= 0:
            raise SynthesisError("step must be positive")
        lo, hi = box[name]
        if lo > hi:
            raise SynthesisError(f"degenerate box for {name}")
        vals = []
        v = Fraction(lo)
        while v <= hi:
            vals.append(v)
            v += s
        axes.append(vals)
    points: List[Dict[str, Fraction]] = []

    def rec(i: int, acc: Dict[str, Fraction]):
        if i == len(names):
            points.append(dict(acc))
            return
        for v in axes[i]:
            acc[names[i]] = v
            rec(i + 1, acc)
    rec(0, {})
    return points


def _point_vars(net: PsaNetwork, point: Mapping[str, Fraction]) -> Dict[Var, Fraction]:
    return {net.param_by_name(n): v for n, v in point.items()}


def cartography(
    net: PsaNetwork,
    box: Mapping[str, Tuple[Fraction, Fraction]],
    step: Fraction,
    bad_locations: Iterable[str] = (MISS_LOCATION,),
    depth_bound: Optional[int] = None,
    discrete_assignment: Optional[Mapping[str, int]] = None,
    jobs: int = 1,
    im_max_states: int = DEFAULT_MAX_STATES,
) -> Cartography:
    """Cover a parameter box with inverse-method tiles.

    Grid points are visited in row-major order; a point inside an existing
    tile is skipped, otherwise the inverse method runs there and the tile
    gets the verdict of its reference point.  Points whose run does not
    converge stay uncovered and are classified individually so the verdict
    grid is total either way.
    """
    depth = depth_bound if depth_bound is not None else DEFAULT_DEPTH
    points = grid_points(box, step)
    discrete = dict(discrete_assignment or {})
    tiles: List[Tile] = []
    uncovered: List[Dict[str, Fraction]] = []
    grid: List[Tuple[Dict[str, Fraction], str]] = []
    lock = threading.Lock()
    verdict_cache: Dict[Tuple, str] = {}

    def point_verdict(pt: Dict[str, Fraction]) -> str:
        key = tuple(sorted(pt.items()))
        with lock:
            if key in verdict_cache:
                return verdict_cache[key]
        v = classify_point(net, _point_vars(net, pt), bad_locations, depth)
        with lock:
            verdict_cache[key] = v
        return v

    def covering_tile(pt: Dict[str, Fraction]) -> Optional[Tile]:
        vars_pt = _point_vars(net, pt)
        for tile in tiles:
            if tile.verdict == DEPTH_EXCEEDED:
                continue
            if geo.satisfies(tile.region, vars_pt):
                return tile
        return None

    def analyze(pt: Dict[str, Fraction]) -> Optional[Tile]:
        vars_pt = _point_vars(net, pt)
        verdict = point_verdict(pt)
        if verdict != SCHEDULABLE:
            # a missing reference cannot reach the trace fixpoint: past the
            # frozen miss there are sibling branches whose job counters grow
            # without bound, so the run would only burn its state budget;
            # the point is classified individually instead
            return None
        res = inverse_method(net, vars_pt, depth, max_states=im_max_states)
        if not res.reached_fixpoint:
            return None
        return Tile(res.constraint, discrete, SCHEDULABLE, dict(pt))

    pending = list(points)
    executor = (
        concurrent.futures.ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else None
    )
    try:
        i = 0
        while i < len(pending):
            pt = pending[i]
            tile = covering_tile(pt)
            if tile is not None:
                grid.append((pt, tile.verdict))
                i += 1
                continue
            batch = [pending[i]]
            if executor is not None:
                j = i + 1
                while len(batch) < jobs and j < len(pending):
                    if covering_tile(pending[j]) is None:
                        batch.append(pending[j])
                    j += 1
                batch = batch[: jobs]
            if executor is not None and len(batch) > 1:
                new_tiles = list(executor.map(analyze, batch))
            else:
                new_tiles = [analyze(batch[0])]
            # merge deterministically in grid order; later duplicates by
            # region equality are dropped
            for t in new_tiles:
                if t is None:
                    continue
                if any(
                    t.region == u.region and t.verdict == u.verdict for u in tiles
                ):
                    continue
                tiles.append(t)
            tile = covering_tile(pt)
            if tile is not None:
                grid.append((pt, tile.verdict))
            else:
                uncovered.append(pt)
                grid.append((pt, point_verdict(pt)))
            i += 1
    finally:
        if executor is not None:
            executor.shutdown()
    return Cartography(
        box={k: (Fraction(v[0]), Fraction(v[1])) for k, v in box.items()},
        step=(
            {k: Fraction(v) for k, v in step.items()}
            if isinstance(step, Mapping)
            else Fraction(step)
        ),
        tiles=tiles,
        uncovered_points=uncovered,
        grid=grid,
    )


# -- exploration depth bounds --------------------------------------------------


def demand_crossing_time(
    spec: ComponentSpec,
    box: Mapping[str, Tuple[Fraction, Fraction]],
) -> Optional[Fraction]:
    """First deadline instant where cumulative demand exceeds elapsed time.

    Demand is evaluated at the most loaded corner of the box: every period at
    its minimum, every burst at its maximum.  Deadline instants of the greedy
    release streams are scanned up to ten hyperperiods; None when demand
    never crosses (the corner is not overloaded).
    """
    tasks = []
    for t in spec.by_priority():
        act = t.activation
        if isinstance(act, (Periodic, Sporadic)):
            q = act.period if isinstance(act, Periodic) else act.min_interarrival
            burst = 1
        else:
            assert isinstance(act, ArrivalCurve)
            q = act.period
            burst = act.burst
            if not isinstance(burst, int):
                lo, hi = box[burst.name]
                burst = int(hi)
        period = _box_low(q, box)
        wcet = _box_value(t.wcet, box, low=False)
        deadline = _box_low(t.deadline, box)
        tasks.append((wcet, deadline, period, burst))
    cap = 10 * rational_lcm(*(p for _, _, p, _ in tasks))

    def dbf(t: Fraction) -> Fraction:
        total = ZERO
        for wcet, deadline, period, burst in tasks:
            if t < deadline:
                continue
            # greedy stream arrivals: burst at 0, then every period
            k = (t - deadline) / period
            jobs = burst + k.numerator // k.denominator
            total += wcet * jobs
        return total

    instants: List[Fraction] = []
    for wcet, deadline, period, burst in tasks:
        instant = deadline
        while instant <= cap:
            instants.append(instant)
            instant += period
    for instant in sorted(set(instants)):
        if dbf(instant) > instant:
            return instant
    return None


def _box_low(q, box) -> Fraction:
    return _box_value(q, box, low=True)


def _box_value(q, box, low: bool) -> Fraction:
    if isinstance(q, ParamRef):
        lo, hi = box[q.name]
        return Fraction(lo if low else hi)
    return Fraction(q)


def depth_bound_from_dbf(
    spec: ComponentSpec,
    box: Mapping[str, Tuple[Fraction, Fraction]],
    fallback: Optional[int] = None,
) -> int:
    """Transition-count bound for exploring overloaded corners of a box.

    The crossing time bounds when a deadline miss must have happened at the
    most loaded corner.  The count charges a constant number of transitions
    per released job (arrival chain, scheduling, completion) plus slack per
    automaton, which over-approximates the published per-period heuristic.
    """
    t_star = demand_crossing_time(spec, box)
    n_automata = 2 * len(spec.tasks) + 1
    if t_star is None:
        if fallback is None:
            raise SynthesisError(
                "demand never exceeds supply in the box and no fallback cap given"
            )
        return fallback
    jobs = 0
    for t in spec.by_priority():
        act = t.activation
        if isinstance(act, ArrivalCurve):
            burst = act.burst
            if not isinstance(burst, int):
                burst = int(box[burst.name][1])
            period = _box_low(act.period, box)
        else:
            burst = 1
            q = act.period if isinstance(act, Periodic) else act.min_interarrival
            period = _box_low(q, box)
        jobs += burst + ceil_div(t_star, period) + 1
    per_period = ceil_div(t_star, min(_task_min_period(t, box) for t in spec.tasks))
    heuristic = per_period * n_automata + 2 * n_automata
    return max(8 * jobs + 2 * n_automata, heuristic)


def _task_min_period(t, box) -> Fraction:
    act = t.activation
    q = (
        act.period
        if isinstance(act, (Periodic, ArrivalCurve))
        else act.min_interarrival
    )
    return _box_low(q, box)


# -- serialization --------------------------------------------------------------


def tile_to_json(tile: Tile) -> dict:
    return {
        "discrete": dict(sorted(tile.discrete_assignment.items())),
        "region": geo.polyhedron_to_json(tile.region),
        "verdict": tile.verdict,
        "witness": {
            n: json_number(v) for n, v in sorted(tile.witness_point.items())
        },
    }


def cartography_to_json(carto: Cartography) -> dict:
    return {
        "box": {
            n: [json_number(lo), json_number(hi)]
            for n, (lo, hi) in sorted(carto.box.items())
        },
        "step": (
            {n: json_number(v) for n, v in sorted(carto.step.items())}
            if isinstance(carto.step, Mapping)
            else json_number(carto.step)
        ),
        "tiles": [tile_to_json(t) for t in carto.tiles],
        "uncovered_points": [
            {n: json_number(v) for n, v in sorted(p.items())}
            for p in carto.uncovered_points
        ],
    }


def grid_to_csv(carto: Cartography) -> str:
    names = sorted(carto.box)
    lines = [",".join(names + ["verdict"])]
    for pt, verdict in carto.grid:
        from .rationals import format_fraction

        lines.append(
            ",".join([format_fraction(pt[n]) for n in names] + [verdict])
        )
    return "\n".join(lines) + "\n"
