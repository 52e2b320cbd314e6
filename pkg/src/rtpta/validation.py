"""Cross-validation between the exact simulator and the automata model.

The two engines were written against the same scheduling semantics but share
no code: the simulator is event-driven over job queues, the symbolic side
follows the automata network.  Comparing their timed event sequences at
concrete parameter points is the package's main internal-consistency check,
and any disagreement is surfaced verbatim rather than papered over.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Tuple

from . import automata as am
from . import simulator as sim
from . import synthesis as syn
from .components import (
    MISS_LOCATION,
    ComponentSpec,
    build_component,
    label_event,
    label_rank,
)

Event = Tuple[Fraction, str, str]  # (time, kind, task)


@dataclass
class ComparisonReport:
    point: Dict[str, Fraction]
    matches: bool
    verdict_match: bool
    oracle_events: List[Event]
    symbolic_events: List[Event]
    oracle_schedulable: bool
    symbolic_schedulable: bool
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.matches and self.verdict_match


def _truncate_at_miss(events: List[Event]) -> List[Event]:
    out = []
    for e in events:
        out.append(e)
        if e[1] == "deadline_miss":
            break
    return out


def oracle_events(
    spec: ComponentSpec, point: Mapping[str, Fraction]
) -> Tuple[List[Event], bool]:
    """Task-level event stream of the simulator, cut at the first idle/miss."""
    u = sim.utilization(spec, point)
    horizon: Optional[Fraction] = None
    if u >= 1:
        crossing = syn.demand_crossing_time(
            spec, {n: (v, v) for n, v in point.items()}
        )
        horizon = crossing if crossing is not None else Fraction(10**6)
    res = sim.simulate(spec, point, horizon=horizon)
    events = [(e.time, e.kind, e.task) for e in res.log]
    return _truncate_at_miss(events), res.schedulable


def symbolic_events(
    spec: ComponentSpec,
    point: Mapping[str, Fraction],
    max_steps: int = 4000,
) -> Tuple[List[Event], bool]:
    """Deterministic earliest-event run of the concrete network.

    The run ends when the network freezes (Stop or a deadline miss) and maps
    internal handshakes away, leaving the oracle's vocabulary.
    """
    discrete = {
        p.name: int(point[p.name])
        for p in spec.discrete_parameters()
        if p.name in point
    }
    net = build_component(spec, discrete=discrete, with_time_clock=True)
    var_point = am.resolve_point(
        net, {n: v for n, v in point.items() if n not in discrete}
    )
    cnet = am.concrete_instantiate(net, var_point)
    run = am.canonical_run(cnet, cnet.initial_k(), max_steps, label_rank)
    events: List[Event] = []
    missed = False
    for step in run.steps:
        ev = label_event(step.label)
        if ev is None:
            continue
        kind, task = ev
        events.append((step.instant, kind, task))
        if kind == "deadline_miss":
            missed = True
            break
    return events, not missed


def compare_events(
    spec: ComponentSpec,
    point: Mapping[str, Fraction],
    max_steps: int = 4000,
) -> ComparisonReport:
    """Timed event-sequence equality at one concrete point.

    Both streams are truncated after the first deadline miss (the symbolic
    network freezes there by construction).  Verdicts are compared via the
    bounded reachability check, which is robust at simultaneous-event ties
    where a single linearization is not canonical.
    """
    o_events, o_sched = oracle_events(spec, point)
    s_events, _ = symbolic_events(spec, point, max_steps=max_steps)
    o_cut = _truncate_at_miss(o_events)
    s_cut = _truncate_at_miss(s_events)
    matches = o_cut == s_cut
    detail = ""
    if not matches:
        for i, (a, b) in enumerate(zip(o_cut, s_cut)):
            if a != b:
                detail = f"first divergence at #{i}: oracle {a} vs symbolic {b}"
                break
        else:
            detail = (
                f"length mismatch: oracle {len(o_cut)} vs symbolic {len(s_cut)}"
            )
    s_sched = symbolic_verdict(spec, point) == syn.SCHEDULABLE
    return ComparisonReport(
        point=dict(point),
        matches=matches,
        verdict_match=o_sched == s_sched,
        oracle_events=o_cut,
        symbolic_events=s_cut,
        oracle_schedulable=o_sched,
        symbolic_schedulable=s_sched,
        detail=detail,
    )


def symbolic_verdict(
    spec: ComponentSpec,
    point: Mapping[str, Fraction],
    depth_bound: int = 600,
) -> str:
    """Reachability verdict of the automata model at a concrete point."""
    discrete = {
        p.name: int(point[p.name])
        for p in spec.discrete_parameters()
        if p.name in point
    }
    net = build_component(spec, discrete=discrete)
    var_point = am.resolve_point(
        net, {n: v for n, v in point.items() if n not in discrete}
    )
    return syn.classify_point(net, var_point, (MISS_LOCATION,), depth_bound)


def random_point(
    spec: ComponentSpec, rng: random.Random, denominator: int = 7
) -> Dict[str, Fraction]:
    """Random in-range parameter point; rational coordinates with a small
    fixed denominator keep event ties (measure zero) out of the samples."""
    point: Dict[str, Fraction] = {}
    for p in spec.continuous_parameters():
        span = (p.hi - p.lo) * denominator
        steps = int(span)
        point[p.name] = p.lo + Fraction(rng.randint(0, max(steps, 1)), denominator)
        if point[p.name] > p.hi:
            point[p.name] = p.hi
    for p in spec.discrete_parameters():
        point[p.name] = Fraction(rng.randint(int(p.lo), int(p.hi)))
    return point
