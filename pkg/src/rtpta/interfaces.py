"""Timed-interface synthesis for component contracts.

For each burst count the schedulable parameter region is computed by
cartography, mergeable tiles are fused (two convex regions merge exactly
when their convex hull adds no new points), integer-adjacent regions are
fused again under the integers-only reading, and the minimum guaranteed
response bound is extracted per row.  The resulting document maps "number
of clients / minimum request period" to the response-time promise the
component can sign.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from . import geometry as geo
from .automata import ModelError
from .components import (
    ArrivalCurve,
    ComponentSpec,
    ParamRef,
    build_component,
)
from .geometry import Polyhedron, Var
from .rationals import json_number, to_fraction
from .synthesis import (
    SCHEDULABLE,
    Cartography,
    Tile,
    cartography,
)


class InterfaceError(ModelError):
    pass


@dataclass
class InterfaceRow:
    discrete_assignment: Dict[str, int]
    feasible_regions: List[Polyhedron]  # over the request parameters
    min_response: Optional[Fraction]
    feasible: bool
    integers_only: bool


@dataclass
class InterfaceDoc:
    component: str
    provided: List[str]
    response_param: str
    request_params: List[str]
    rows: List[InterfaceRow]
    provenance: Dict[str, object]


def mergeable(a: Polyhedron, b: Polyhedron) -> bool:
    """True when the convex hull of the two regions equals their union.

    Decided row-wise: a hull point lies outside the union iff it violates
    some inequality of each operand, so every pair of one negated inequality
    from a and one from b is checked for emptiness inside the hull.
    """
    if a.variables != b.variables:
        raise InterfaceError("mergeable operands live on different variables")
    if a.is_empty() or b.is_empty():
        return True
    hull = geo.convex_hull(a, b)
    hull_rows = list(hull.inequalities)

    def negations(p: Polyhedron):
        for row in p.inequalities:
            if row.rel == geo.EQ:
                for side in geo.equality_sides(row):
                    yield geo.negate(side)
            else:
                yield geo.negate(row)

    for na in negations(a):
        for nb in negations(b):
            if geo.rows_feasible(hull_rows + [na, nb]):
                return False
    return True


def merge_fixpoint(tiles: Sequence[Tile]) -> List[Tile]:
    """Greedy pairwise merging until no two tiles are mergeable.

    Only tiles with the same verdict and discrete assignment are candidates;
    the union of regions is preserved exactly (a merge only happens when the
    hull equals the union).  Tiles are kept in canonical region order so the
    outcome is reproducible.
    """
    groups: Dict[Tuple, List[Tile]] = {}
    for t in tiles:
        key = (t.verdict, tuple(sorted(t.discrete_assignment.items())))
        groups.setdefault(key, []).append(t)
    out: List[Tile] = []
    for key in sorted(groups, key=repr):
        work = sorted(groups[key], key=lambda t: geo.format_polyhedron(t.region))
        changed = True
        while changed:
            changed = False
            for i in range(len(work)):
                for j in range(i + 1, len(work)):
                    if mergeable(work[i].region, work[j].region):
                        merged = Tile(
                            region=geo.convex_hull(work[i].region, work[j].region),
                            discrete_assignment=work[i].discrete_assignment,
                            verdict=work[i].verdict,
                            witness_point=work[i].witness_point,
                        )
                        work = (
                            work[:i] + [merged] + work[i + 1 : j] + work[j + 1 :]
                        )
                        changed = True
                        break
                if changed:
                    break
        out.extend(work)
    return out


def _integer_interval(
    p: Polyhedron, v: Var
) -> Optional[Tuple[int, int]]:
    """Largest integer interval contained in the projection onto v."""
    lo, lo_att, hi, hi_att = geo.var_interval(p, v)
    if lo is None or hi is None:
        return None
    ilo = -(-lo.numerator // lo.denominator)  # ceil
    if lo.denominator == 1 and not lo_att:
        ilo = int(lo) + 1
    ihi = hi.numerator // hi.denominator  # floor
    if hi.denominator == 1 and not hi_att:
        ihi = int(hi) - 1
    if ilo > ihi:
        return None
    return ilo, ihi


def integer_merge(tiles: Sequence[Tile], integer_vars: Iterable[Var]) -> List[Tile]:
    """Fuse tiles whose integer intervals on a variable are adjacent.

    Adjacency means the upper integer endpoint of one tile plus one equals
    the lower endpoint of the other, and the projections on every other
    variable coincide; the merged region is the convex hull (the rational
    gap in between contains no integer points).  Results from this pass are
    only valid under the integers-only reading of the parameters.
    """
    work = list(tiles)
    for v in sorted(integer_vars, key=lambda u: u.name):
        changed = True
        while changed:
            changed = False
            for i in range(len(work)):
                for j in range(len(work)):
                    if i == j:
                        continue
                    a, b = work[i], work[j]
                    if a.verdict != b.verdict:
                        continue
                    if a.discrete_assignment != b.discrete_assignment:
                        continue
                    ia = _integer_interval(a.region, v)
                    ib = _integer_interval(b.region, v)
                    if ia is None or ib is None:
                        continue
                    if ia[1] + 1 != ib[0]:
                        continue
                    rest_a = geo.eliminate(a.region, {v})
                    rest_b = geo.eliminate(b.region, {v})
                    if not (
                        geo.includes(rest_a, rest_b)
                        and geo.includes(rest_b, rest_a)
                    ):
                        continue
                    merged = Tile(
                        region=geo.convex_hull(a.region, b.region),
                        discrete_assignment=a.discrete_assignment,
                        verdict=a.verdict,
                        witness_point=a.witness_point,
                    )
                    work = [
                        t for k, t in enumerate(work) if k not in (i, j)
                    ] + [merged]
                    changed = True
                    break
                if changed:
                    break
    return sorted(work, key=lambda t: geo.format_polyhedron(t.region))


def interface_task(spec: ComponentSpec):
    """The provided-method task: the arrival-curve task with parametric
    period and deadline."""
    cands = [
        t
        for t in spec.tasks
        if isinstance(t.activation, ArrivalCurve)
        and isinstance(t.deadline, ParamRef)
    ]
    if len(cands) != 1:
        raise InterfaceError(
            "interface synthesis expects exactly one arrival-curve task "
            "with a parametric deadline"
        )
    return cands[0]


def minimal_response(
    tiles: Sequence[Tile],
    request_var: Var,
    response_var: Var,
) -> Optional[Fraction]:
    """Smallest response bound valid across the whole feasible region.

    Along the request axis the guaranteed bound is the lower envelope of the
    tiles; the row reports its supremum.  Candidates are evaluated at every
    tile endpoint and between consecutive endpoints, which is exact for
    piecewise-constant envelopes (tiles from fixed-priority sweeps) and a
    close sample otherwise.
    """
    if not tiles:
        return None
    cuts: List[Fraction] = []
    for t in tiles:
        lo, _, hi, _ = geo.var_interval(t.region, request_var)
        if lo is None or hi is None:
            raise InterfaceError("unbounded request region")
        cuts.extend([lo, hi])
    cuts = sorted(set(cuts))
    candidates: List[Fraction] = list(cuts)
    for a, b in zip(cuts, cuts[1:]):
        candidates.append(a + (b - a) / 2)
    worst: Optional[Fraction] = None
    for p in candidates:
        best: Optional[Fraction] = None
        for t in tiles:
            rows = list(t.region.inequalities) + [
                geo.make_inequality({request_var: Fraction(1)}, geo.EQ, p)
            ]
            if not geo.rows_feasible(rows):
                continue
            status, val, _ = _min_over(rows, response_var)
            if status == "optimal" and (best is None or val < best):
                best = val
        if best is None:
            continue  # gap in the union
        if worst is None or best > worst:
            worst = best
    return worst


def _min_over(rows, var: Var):
    from . import lp

    lp_rows = [
        lp.LpRow(tuple((v.name, c) for v, c in r.terms), r.rel, r.rhs)
        for r in rows
    ]
    return lp.optimize(lp_rows, {var.name: Fraction(1)}, maximize=False)


def upper_bound_burst(
    spec: ComponentSpec,
    box: Mapping[str, Tuple[Fraction, Fraction]],
    max_burst: int = 16,
) -> int:
    """Largest burst the component survives at the friendliest box corner
    (every continuous parameter at its maximum)."""
    from . import simulator as sim

    task = interface_task(spec)
    burst_name = (
        task.activation.burst.name
        if isinstance(task.activation.burst, ParamRef)
        else None
    )
    point = {n: Fraction(hi) for n, (lo, hi) in box.items()}
    best = 0
    for nu in range(1, max_burst + 1):
        probe = dict(point)
        if burst_name is None:
            raise InterfaceError("burst is fixed; nothing to bound")
        probe[burst_name] = Fraction(nu)
        ok, _ = sim.is_schedulable(spec, probe)
        if ok:
            best = nu
        else:
            break
    return best


def synthesize_interface(
    spec: ComponentSpec,
    discrete_ranges: Mapping[str, Tuple[int, int]],
    box: Mapping[str, Tuple[Fraction, Fraction]],
    step,
    depth_bound: Optional[int] = None,
    jobs: int = 1,
    integer_endpoints: bool = True,
    component_name: str = "component",
) -> InterfaceDoc:
    """Per-burst cartography, merging, and response-bound extraction.

    Every discrete assignment gets its own row; assignments with no
    schedulable tile are reported infeasible explicitly (consumers need the
    negative information as much as the feasible rows).
    """
    task = interface_task(spec)
    response_name = task.deadline.name
    request_names = [n for n in box if n != response_name]
    if response_name not in box:
        raise InterfaceError(f"box must include the response parameter {response_name}")
    if len(request_names) != 1:
        raise InterfaceError("exactly one request parameter is supported")
    request_name = request_names[0]
    rows: List[InterfaceRow] = []
    names = sorted(discrete_ranges)
    axes = [range(int(discrete_ranges[n][0]), int(discrete_ranges[n][1]) + 1) for n in names]
    for combo in itertools.product(*axes):
        assignment = dict(zip(names, combo))
        net = build_component(spec, discrete=assignment)
        request_var = net.param_by_name(request_name)
        response_var = net.param_by_name(response_name)
        carto = cartography(
            net,
            box,
            step,
            depth_bound=depth_bound,
            discrete_assignment=assignment,
            jobs=jobs,
        )
        sched = [t for t in carto.tiles if t.verdict == SCHEDULABLE]
        merged = merge_fixpoint(sched)
        if integer_endpoints:
            merged = integer_merge(merged, [request_var])
        if not merged:
            rows.append(
                InterfaceRow(assignment, [], None, False, integer_endpoints)
            )
            continue
        regions = [
            geo.eliminate(t.region, set(t.region.variables) - {request_var})
            for t in merged
        ]
        regions = _dedupe_regions(regions)
        min_resp = minimal_response(merged, request_var, response_var)
        rows.append(
            InterfaceRow(assignment, regions, min_resp, True, integer_endpoints)
        )
    provenance = {
        "box": {n: [json_number(lo), json_number(hi)] for n, (lo, hi) in sorted(box.items())},
        "step": (
            {n: json_number(Fraction(v)) for n, v in sorted(step.items())}
            if isinstance(step, Mapping)
            else json_number(Fraction(step))
        ),
        "depth_bound": depth_bound,
        "integer_endpoints": integer_endpoints,
        "discrete_ranges": {
            n: [int(lo), int(hi)] for n, (lo, hi) in sorted(discrete_ranges.items())
        },
    }
    return InterfaceDoc(
        component=component_name,
        provided=[task.name],
        response_param=response_name,
        request_params=[request_name],
        rows=rows,
        provenance=provenance,
    )


def _dedupe_regions(regions: List[Polyhedron]) -> List[Polyhedron]:
    out: List[Polyhedron] = []
    for r in sorted(regions, key=geo.format_polyhedron):
        if any(geo.includes(o, r) and geo.includes(r, o) for o in out):
            continue
        out.append(r)
    return out


# -- serialization -------------------------------------------------------------


def doc_to_json(doc: InterfaceDoc) -> dict:
    return {
        "component": doc.component,
        "provided": list(doc.provided),
        "response_param": doc.response_param,
        "request_params": list(doc.request_params),
        "rows": [
            {
                "discrete": dict(sorted(r.discrete_assignment.items())),
                "regions": [geo.polyhedron_to_json(p) for p in r.feasible_regions],
                "min_response": None
                if r.min_response is None
                else json_number(r.min_response),
                "feasible": r.feasible,
                "integers_only": r.integers_only,
            }
            for r in doc.rows
        ],
        "provenance": doc.provenance,
    }


def doc_from_json(data: Mapping) -> InterfaceDoc:
    rows = []
    for r in data["rows"]:
        request_vars = [Var(n, geo.PARAMETER) for n in data["request_params"]]
        regions = [
            geo.polyhedron_from_json(p, request_vars) for p in r["regions"]
        ]
        rows.append(
            InterfaceRow(
                discrete_assignment={k: int(v) for k, v in r["discrete"].items()},
                feasible_regions=regions,
                min_response=None
                if r["min_response"] is None
                else to_fraction(r["min_response"]),
                feasible=bool(r["feasible"]),
                integers_only=bool(r["integers_only"]),
            )
        )
    return InterfaceDoc(
        component=data["component"],
        provided=list(data["provided"]),
        response_param=data["response_param"],
        request_params=list(data["request_params"]),
        rows=rows,
        provenance=dict(data["provenance"]),
    )


def doc_to_table(doc: InterfaceDoc) -> str:
    """Human-readable summary, one row per discrete assignment."""
    lines = [f"timed interface: {doc.component} (methods: {', '.join(doc.provided)})"]
    for r in doc.rows:
        key = ", ".join(f"{k} = {v}" for k, v in sorted(r.discrete_assignment.items()))
        if not r.feasible:
            lines.append(f"  {key}: infeasible")
            continue
        parts = []
        for region in r.feasible_regions:
            parts.append("(" + geo.format_polyhedron(region).replace(" & ", " and ") + ")")
        region_text = " or ".join(parts) if parts else "(anywhere)"
        from .rationals import format_fraction

        resp = format_fraction(r.min_response) if r.min_response is not None else "?"
        lines.append(
            f"  {key}: when {region_text} -> min {doc.response_param} = {resp}"
        )
    return "\n".join(lines) + "\n"
