"""Parametric stopwatch automata and their symbolic semantics.

An automaton has locations with invariants and per-clock slopes (0 or 1),
transitions guarded by linear constraints over clocks and parameters, and
bounded integer counters ("discretes") that live outside the polyhedra:
guard rows may use counters in coefficients (e.g. ``c = N*C``) and are
linearized per state by substituting the counter values before any zone
operation, which keeps the constraint theory linear even with parametric
coefficients.

Networks synchronize CSP-style: a label is executed jointly by every
automaton declaring it, and committed locations (no time elapse) take
priority over everything else.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import (
    Callable,
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
)

from . import geometry as geo
from .geometry import (
    CLOCK,
    EQ,
    LE,
    LT,
    GeometryError,
    Inequality,
    Polyhedron,
    SlopeVector,
    Var,
)
from .rationals import format_fraction

ZERO = Fraction(0)
ONE = Fraction(1)

TIME_VAR_NAME = "_time"


class ModelError(ValueError):
    """Structural problem in an automaton or network definition."""


@dataclass(frozen=True)
class DiscreteAffine:
    """Integer-affine expression over discrete counters: const + sum(c_i * n_i)."""

    const: Fraction = ZERO
    coeffs: Tuple[Tuple[str, Fraction], ...] = ()

    @staticmethod
    def of(const=0, **coeffs) -> "DiscreteAffine":
        items = tuple(
            sorted((n, Fraction(c)) for n, c in coeffs.items() if c != 0)
        )
        return DiscreteAffine(Fraction(const), items)

    def evaluate(self, discretes: Mapping[str, int]) -> Fraction:
        total = self.const
        for name, c in self.coeffs:
            total += c * discretes[name]
        return total

    def scale(self, k: Fraction) -> "DiscreteAffine":
        return DiscreteAffine(
            self.const * k, tuple((n, c * k) for n, c in self.coeffs)
        )

    def plus(self, other: "DiscreteAffine") -> "DiscreteAffine":
        coeffs: Dict[str, Fraction] = dict(self.coeffs)
        for n, c in other.coeffs:
            coeffs[n] = coeffs.get(n, ZERO) + c
        items = tuple(sorted((n, c) for n, c in coeffs.items() if c != 0))
        return DiscreteAffine(self.const + other.const, items)

    def is_constant(self) -> bool:
        return not self.coeffs

    def __str__(self) -> str:
        parts = [format_fraction(self.const)] if self.const or not self.coeffs else []
        for n, c in self.coeffs:
            parts.append(f"{format_fraction(c)}*{n}")
        return " + ".join(parts)


def aff(value) -> DiscreteAffine:
    """Coerce ints/Fractions/counter names into a DiscreteAffine."""
    if isinstance(value, DiscreteAffine):
        return value
    if isinstance(value, str):
        return DiscreteAffine.of(**{value: 1})
    return DiscreteAffine.of(value)


@dataclass(frozen=True)
class SymRow:
    """Constraint row whose coefficients may mention discrete counters."""

    terms: Tuple[Tuple[Var, DiscreteAffine], ...]
    rel: str
    rhs: DiscreteAffine

    def instantiate(self, discretes: Mapping[str, int]):
        """Resolve counters: returns a geometry Inequality, or a bool when
        every variable coefficient evaluates to zero."""
        coeffs = {}
        for v, a in self.terms:
            c = a.evaluate(discretes)
            if c != 0:
                coeffs[v] = c
        rhs = self.rhs.evaluate(discretes)
        if not coeffs:
            if self.rel == EQ:
                return rhs == 0
            if self.rel == LE:
                return rhs >= 0
            return rhs > 0
        return geo.make_inequality(coeffs, self.rel, rhs)

    def substitute_params(self, values: Mapping[Var, Fraction]) -> "SymRow":
        terms = []
        rhs = self.rhs
        for v, a in self.terms:
            if v in values:
                rhs = rhs.plus(a.scale(-values[v]))
            else:
                terms.append((v, a))
        return SymRow(tuple(terms), self.rel, rhs)

    def variables(self) -> Tuple[Var, ...]:
        return tuple(v for v, _ in self.terms)

    def __str__(self) -> str:
        lhs = " + ".join(f"({a})*{v.name}" for v, a in self.terms) or "0"
        return f"{lhs} {self.rel} {self.rhs}"


def srow(coeffs: Mapping[Var, object], rel: str, rhs) -> SymRow:
    terms = tuple(
        sorted(((v, aff(c)) for v, c in coeffs.items()), key=lambda t: t[0].name)
    )
    return SymRow(terms, rel, aff(rhs))


Guard = Tuple[SymRow, ...]


@dataclass(frozen=True)
class LocationDef:
    id: str
    invariant: Guard = ()
    slope: SlopeVector = SlopeVector(())
    committed: bool = False


@dataclass(frozen=True)
class TransitionDef:
    source: str
    guard: Guard
    action: str
    resets: FrozenSet[Var]
    updates: Tuple[Tuple[str, DiscreteAffine], ...]
    target: str


@dataclass(frozen=True)
class PsaModel:
    """One automaton: locations, transitions, clocks, parameters, counters.

    ``declared_actions`` extends the alphabet beyond the labels that appear
    on transitions: an automaton that declares a label but offers no edge for
    it blocks that label network-wide (strong synchronization).
    """

    name: str
    locations: Tuple[LocationDef, ...]
    initial_location: str
    clocks: FrozenSet[Var]
    parameters: FrozenSet[Var]
    transitions: Tuple[TransitionDef, ...]
    discrete_inits: Tuple[Tuple[str, int], ...] = ()
    initial_constraint: Tuple[SymRow, ...] = ()
    declared_actions: FrozenSet[str] = frozenset()

    def __post_init__(self):
        ids = [loc.id for loc in self.locations]
        if len(set(ids)) != len(ids):
            raise ModelError(f"{self.name}: duplicate location ids")
        if self.initial_location not in ids:
            raise ModelError(f"{self.name}: missing initial location")
        by_id = {loc.id: loc for loc in self.locations}
        for t in self.transitions:
            if t.source not in by_id or t.target not in by_id:
                raise ModelError(f"{self.name}: dangling transition {t.source}->{t.target}")
            if not t.resets <= self.clocks:
                raise ModelError(f"{self.name}: reset of foreign clock")
        for loc in self.locations:
            for c in self.clocks:
                loc.slope.rate(c)

    @property
    def actions(self) -> FrozenSet[str]:
        return frozenset(t.action for t in self.transitions) | self.declared_actions

    def location(self, loc_id: str) -> LocationDef:
        for loc in self.locations:
            if loc.id == loc_id:
                return loc
        raise KeyError(loc_id)

    def outgoing(self, loc_id: str) -> List[TransitionDef]:
        return [t for t in self.transitions if t.source == loc_id]


class PsaNetwork:
    """Synchronized product of automata over shared labels and parameters."""

    def __init__(self, automata: Sequence[PsaModel], time_var: Optional[Var] = None):
        self.automata: Tuple[PsaModel, ...] = tuple(automata)
        self.time_var = time_var
        clocks: List[Var] = []
        params: set = set()
        discretes: Dict[str, int] = {}
        for a in self.automata:
            for c in a.clocks:
                if c in clocks:
                    raise ModelError(f"clock {c.name} declared twice")
                clocks.append(c)
            params |= set(a.parameters)
            for name, init in a.discrete_inits:
                if name in discretes:
                    raise ModelError(f"counter {name} declared twice")
                discretes[name] = init
        if time_var is not None:
            if time_var in clocks:
                raise ModelError("time variable collides with a clock")
            clocks.append(time_var)
        self.clocks: Tuple[Var, ...] = tuple(clocks)
        self.parameters: FrozenSet[Var] = frozenset(params)
        self.discrete_inits: Dict[str, int] = discretes
        self.variables: FrozenSet[Var] = frozenset(self.clocks) | self.parameters
        participants: Dict[str, List[int]] = {}
        for i, a in enumerate(self.automata):
            for label in a.actions:
                participants.setdefault(label, []).append(i)
        self.label_participants: Dict[str, Tuple[int, ...]] = {
            label: tuple(ids) for label, ids in participants.items()
        }

    def param_by_name(self, name: str) -> Var:
        for v in self.parameters:
            if v.name == name:
                return v
        raise KeyError(name)

    def initial_k(self) -> Polyhedron:
        """Meet of the automata's parameter constraints, over parameters only."""
        rows: List[Inequality] = []
        for a in self.automata:
            for row in a.initial_constraint:
                inst = row.instantiate(self.discrete_inits)
                if inst is False:
                    return Polyhedron.empty(self.parameters)
                if inst is True:
                    continue
                rows.append(inst)
        return Polyhedron(self.parameters, rows)


@dataclass(frozen=True)
class SymbolicState:
    """(location vector, counter valuation, zone over clocks+parameters)."""

    locations: Tuple[str, ...]
    discretes: Tuple[Tuple[str, int], ...]
    zone: Polyhedron

    def key(self):
        return (self.locations, self.discretes)

    def discrete_map(self) -> Dict[str, int]:
        return dict(self.discretes)

    def describe(self) -> str:
        locs = ",".join(self.locations)
        return f"<{locs} | {dict(self.discretes)}>"


@dataclass(frozen=True)
class SyncCombo:
    """One synchronized step: a label plus the chosen transition per mover."""

    label: str
    moves: Tuple[Tuple[int, int], ...]  # (automaton index, transition index)


@dataclass(frozen=True)
class Trace:
    """Time-abstract run: alternating location vectors and labels."""

    locations: Tuple[Tuple[str, ...], ...]
    labels: Tuple[str, ...]

    def __post_init__(self):
        if len(self.locations) != len(self.labels) + 1:
            raise ModelError("trace shape mismatch")


def _freeze_discretes(d: Mapping[str, int]) -> Tuple[Tuple[str, int], ...]:
    return tuple(sorted(d.items()))


def _instantiate_guard(
    guard: Guard, discretes: Mapping[str, int]
) -> Optional[List[Inequality]]:
    """None when a counter-only row is false; otherwise the zone rows."""
    rows: List[Inequality] = []
    for srow_ in guard:
        inst = srow_.instantiate(discretes)
        if inst is False:
            return None
        if inst is True:
            continue
        rows.append(inst)
    return rows


def _joint_slopes(net: PsaNetwork, locations: Sequence[str]) -> SlopeVector:
    rates: Dict[Var, int] = {}
    for a, loc_id in zip(net.automata, locations):
        loc = a.location(loc_id)
        for c in a.clocks:
            rates[c] = loc.slope.rate(c)
    if net.time_var is not None:
        rates[net.time_var] = 1
    return SlopeVector.of(rates)


def _invariant_rows(
    net: PsaNetwork, locations: Sequence[str], discretes: Mapping[str, int]
) -> Optional[List[Inequality]]:
    rows: List[Inequality] = []
    for a, loc_id in zip(net.automata, locations):
        got = _instantiate_guard(a.location(loc_id).invariant, discretes)
        if got is None:
            return None
        rows.extend(got)
    return rows


def _any_committed(net: PsaNetwork, locations: Sequence[str]) -> bool:
    return any(
        a.location(loc).committed for a, loc in zip(net.automata, locations)
    )


def initial_state(net: PsaNetwork, k: Polyhedron) -> SymbolicState:
    """All clocks zero, counters at their initial values, then elapse.

    The parameter constraint k is met in first; time may elapse only when no
    initial location is committed; invariants are met before and after.
    """
    if set(k.variables) - set(net.parameters):
        raise ModelError("initial constraint mentions non-parameters")
    locations = tuple(a.initial_location for a in net.automata)
    discretes = dict(net.discrete_inits)
    rows: List[Inequality] = [
        geo.make_inequality({c: ONE}, EQ, ZERO) for c in net.clocks
    ]
    for row in k.inequalities:
        rows.append(row)
    inv = _invariant_rows(net, locations, discretes)
    if inv is None:
        raise ModelError("initial counter valuation violates an invariant")
    zone = Polyhedron(net.variables, rows + inv)
    if k._explicit_empty or zone.is_empty():
        raise ModelError("initial zone is empty (model inconsistent with K)")
    if not _any_committed(net, locations):
        zone = geo.time_elapse(zone, _joint_slopes(net, locations))
        zone = geo.meet_rows(zone, inv)
        if zone.is_empty():
            raise ModelError("initial zone empty after elapse")
    return SymbolicState(locations, _freeze_discretes(discretes), zone)


def enabled_syncs(net: PsaNetwork, state: SymbolicState) -> List[SyncCombo]:
    """Statically enabled synchronizations (zone feasibility comes later).

    Every automaton declaring a label must move on it.  Counter-only guard
    rows are evaluated here; with a committed location somewhere, only combos
    moving at least one committed automaton survive.
    """
    discretes = state.discrete_map()
    committed_idx = {
        i
        for i, (a, loc) in enumerate(zip(net.automata, state.locations))
        if a.location(loc).committed
    }
    combos: List[SyncCombo] = []
    for label in sorted(net.label_participants):
        parts = net.label_participants[label]
        choices: List[List[Tuple[int, int]]] = []
        dead = False
        for i in parts:
            a = net.automata[i]
            opts = []
            for ti, t in enumerate(a.transitions):
                if t.action != label or t.source != state.locations[i]:
                    continue
                if _instantiate_guard(t.guard, discretes) is None:
                    continue
                opts.append((i, ti))
            if not opts:
                dead = True
                break
            choices.append(opts)
        if dead:
            continue
        stack: List[Tuple[Tuple[int, int], ...]] = [()]
        for opts in choices:
            stack = [prefix + (o,) for prefix in stack for o in opts]
        for moves in stack:
            combos.append(SyncCombo(label, moves))
    if committed_idx:
        combos = [
            c
            for c in combos
            if any(i in committed_idx for i, _ in c.moves)
        ]
    return combos


def successor(
    net: PsaNetwork, state: SymbolicState, combo: SyncCombo
) -> Optional[SymbolicState]:
    """One synchronized step; None when any intermediate polyhedron empties.

    zone' = elapse(reset(meet(zone, guards))) meet target invariants, with
    elapse suppressed when some target location is committed; counter updates
    are evaluated against the pre-step valuation.
    """
    discretes = state.discrete_map()
    guard_rows: List[Inequality] = []
    resets: set = set()
    updates: List[Tuple[str, DiscreteAffine]] = []
    new_locations = list(state.locations)
    for i, ti in combo.moves:
        t = net.automata[i].transitions[ti]
        got = _instantiate_guard(t.guard, discretes)
        if got is None:
            return None
        guard_rows.extend(got)
        resets |= t.resets
        updates.extend(t.updates)
        new_locations[i] = t.target
    zone = geo.meet_rows(state.zone, guard_rows)
    if zone.is_empty():
        return None
    if resets:
        zone = geo.eliminate(zone, resets, minimize=False)
        zero_rows = [geo.make_inequality({c: ONE}, EQ, ZERO) for c in resets]
        zone = Polyhedron(net.variables, zone.inequalities + tuple(zero_rows))
    new_discretes = dict(discretes)
    for name, expr in updates:
        val = expr.evaluate(discretes)
        if val.denominator != 1:
            raise ModelError(f"non-integer counter update for {name}")
        new_discretes[name] = int(val)
    inv = _invariant_rows(net, new_locations, new_discretes)
    if inv is None:
        return None
    zone = geo.meet_rows(zone, inv)
    if zone.is_empty():
        return None
    if not _any_committed(net, new_locations):
        zone = geo.time_elapse(zone, _joint_slopes(net, new_locations))
        zone = geo.meet_rows(zone, inv)
        if zone.is_empty():
            return None
    return SymbolicState(
        tuple(new_locations), _freeze_discretes(new_discretes), zone
    )


def project_params(net: PsaNetwork, state: SymbolicState) -> Polyhedron:
    """Projection of the zone onto the parameters (clocks eliminated)."""
    return geo.eliminate(state.zone, set(net.clocks) & set(state.zone.variables))


def resolve_point(net: PsaNetwork, values: Mapping[str, object]) -> Dict[Var, Fraction]:
    """Name-keyed parameter values -> Var-keyed exact point."""
    from .rationals import to_fraction

    point: Dict[Var, Fraction] = {}
    for name, raw in values.items():
        point[net.param_by_name(name)] = to_fraction(raw)
    missing = set(net.parameters) - set(point)
    if missing:
        raise ModelError(f"missing parameter values: {sorted(v.name for v in missing)}")
    return point


def pi_compatible(state: SymbolicState, point: Mapping[Var, Fraction]) -> bool:
    """Does the state remain reachable when parameters take these values?"""
    return not geo.substitute(state.zone, point).is_empty()


def concrete_instantiate(net: PsaNetwork, point: Mapping[Var, Fraction]) -> PsaNetwork:
    """Replace every parameter occurrence by its value; parameter set empties."""
    missing = set(net.parameters) - set(point)
    if missing:
        raise ModelError(f"missing parameter values: {sorted(v.name for v in missing)}")

    def conv_guard(guard: Guard) -> Guard:
        return tuple(r.substitute_params(point) for r in guard)

    new_automata = []
    for a in net.automata:
        new_automata.append(
            PsaModel(
                name=a.name,
                locations=tuple(
                    LocationDef(
                        loc.id, conv_guard(loc.invariant), loc.slope, loc.committed
                    )
                    for loc in a.locations
                ),
                initial_location=a.initial_location,
                clocks=a.clocks,
                parameters=frozenset(),
                transitions=tuple(
                    TransitionDef(
                        t.source,
                        conv_guard(t.guard),
                        t.action,
                        t.resets,
                        t.updates,
                        t.target,
                    )
                    for t in a.transitions
                ),
                discrete_inits=a.discrete_inits,
                initial_constraint=tuple(
                    r.substitute_params(point) for r in a.initial_constraint
                ),
                declared_actions=a.declared_actions,
            )
        )
    return PsaNetwork(new_automata, time_var=net.time_var)


@dataclass
class Exploration:
    """Breadth-first reachable fragment with inclusion-based merging."""

    states: List[SymbolicState] = field(default_factory=list)
    edges: List[Tuple[int, str, int]] = field(default_factory=list)
    parents: List[Optional[Tuple[int, str]]] = field(default_factory=list)
    depths: List[int] = field(default_factory=list)
    truncated: bool = False
    halted_at: Optional[int] = None

    def trace_to(self, idx: int) -> Trace:
        labels: List[str] = []
        locs: List[Tuple[str, ...]] = [self.states[idx].locations]
        while self.parents[idx] is not None:
            parent, label = self.parents[idx]
            labels.append(label)
            idx = parent
            locs.append(self.states[idx].locations)
        labels.reverse()
        locs.reverse()
        return Trace(tuple(locs), tuple(labels))

    def maximal_traces(self) -> List[Tuple[str, ...]]:
        """Label sequences of states with no outgoing explored edge."""
        has_child = {src for src, _, _ in self.edges}
        out = []
        for i in range(len(self.states)):
            if i not in has_child:
                out.append(self.trace_to(i).labels)
        return sorted(set(out))


def bounded_explore(
    net: PsaNetwork,
    k: Polyhedron,
    depth: int,
    halt_on: Optional[Callable[[SymbolicState], bool]] = None,
    max_states: int = 20000,
) -> Exploration:
    """BFS closure of the successor relation up to a transition depth.

    A newly produced state is discarded when an already-kept state with the
    same locations and counters has a zone that includes it (standard zone
    convergence; strictly more termination than exact match).
    """
    result = Exploration()
    seen: Dict[Tuple, List[int]] = {}

    def register(state: SymbolicState, parent, depth_now) -> Tuple[int, bool]:
        bucket = seen.setdefault(state.key(), [])
        for idx in bucket:
            if geo.includes(result.states[idx].zone, state.zone):
                return idx, False
        idx = len(result.states)
        result.states.append(state)
        result.parents.append(parent)
        result.depths.append(depth_now)
        bucket.append(idx)
        return idx, True

    init = initial_state(net, k)
    register(init, None, 0)
    if halt_on and halt_on(init):
        result.halted_at = 0
        return result
    frontier = [0]
    level = 0
    while frontier and level < depth:
        if len(result.states) > max_states:
            result.truncated = True
            break
        level += 1
        next_frontier: List[int] = []
        for idx in frontier:
            state = result.states[idx]
            for combo in enabled_syncs(net, state):
                nxt = successor(net, state, combo)
                if nxt is None:
                    continue
                new_idx, is_new = register(nxt, (idx, combo.label), level)
                result.edges.append((idx, combo.label, new_idx))
                if not is_new:
                    continue
                if halt_on and halt_on(nxt):
                    result.halted_at = new_idx
                    return result
                next_frontier.append(new_idx)
        frontier = next_frontier
    if frontier and level >= depth:
        result.truncated = True
    return result


@dataclass(frozen=True)
class RunStep:
    label: str
    instant: Optional[Fraction]
    state: SymbolicState


@dataclass
class CanonicalRun:
    """Deterministic earliest-event run of a concrete network."""

    steps: List[RunStep]
    terminal: SymbolicState
    truncated: bool

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(s.label for s in self.steps)


def canonical_run(
    net: PsaNetwork,
    k: Polyhedron,
    max_steps: int,
    label_rank: Callable[[str], Tuple],
    stop_on: Optional[Callable[[SymbolicState], bool]] = None,
) -> CanonicalRun:
    """Follow the unique earliest-event linearization of a concrete run.

    Requires the network to carry the global time clock so that every
    feasible step has a well-defined earliest instant; simultaneous steps are
    ordered by the caller-supplied label rank (completions before misses
    before arrivals before scheduling).
    """
    if net.time_var is None:
        raise ModelError("canonical_run needs a network built with the time clock")
    state = initial_state(net, k)
    steps: List[RunStep] = []
    truncated = False
    for _ in range(max_steps):
        if stop_on and stop_on(state):
            break
        best = None
        for combo in enabled_syncs(net, state):
            nxt = successor(net, state, combo)
            if nxt is None:
                continue
            lo, _, _, _ = geo.var_interval(nxt.zone, net.time_var)
            assert lo is not None, "concrete run without a pinned instant"
            key = (lo, label_rank(combo.label), combo.moves)
            if best is None or key < best[0]:
                best = (key, combo, nxt)
        if best is None:
            break
        (instant, _, _), combo, nxt = best
        steps.append(RunStep(combo.label, instant, nxt))
        state = nxt
    else:
        truncated = True
    return CanonicalRun(steps, state, truncated)


# -- dumps ------------------------------------------------------------------


def _guard_text(guard: Guard) -> str:
    return " & ".join(str(r) for r in guard) if guard else "true"


def network_to_json(net: PsaNetwork) -> dict:
    """Structural dump (locations, transitions, constraints as text)."""
    autos = []
    for a in net.automata:
        autos.append(
            {
                "name": a.name,
                "initial": a.initial_location,
                "clocks": sorted(c.name for c in a.clocks),
                "parameters": sorted(p.name for p in a.parameters),
                "counters": dict(a.discrete_inits),
                "locations": [
                    {
                        "id": loc.id,
                        "committed": loc.committed,
                        "invariant": _guard_text(loc.invariant),
                        "slopes": {
                            v.name: r for v, r in loc.slope.rates if v in a.clocks
                        },
                    }
                    for loc in a.locations
                ],
                "transitions": [
                    {
                        "source": t.source,
                        "target": t.target,
                        "label": t.action,
                        "guard": _guard_text(t.guard),
                        "resets": sorted(c.name for c in t.resets),
                        "updates": {n: str(e) for n, e in t.updates},
                    }
                    for t in a.transitions
                ],
            }
        )
    return {"automata": autos}


def network_to_dot(net: PsaNetwork) -> str:
    """One digraph per automaton, for documentation."""
    lines = ["digraph network {", "  compound=true;"]
    for ai, a in enumerate(net.automata):
        lines.append(f"  subgraph cluster_{ai} {{")
        lines.append(f'    label="{a.name}";')
        for loc in a.locations:
            shape = "doublecircle" if loc.committed else "circle"
            lines.append(f'    "{a.name}.{loc.id}" [label="{loc.id}" shape={shape}];')
        for t in a.transitions:
            lines.append(
                f'    "{a.name}.{t.source}" -> "{a.name}.{t.target}" [label="{t.action}"];'
            )
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines)
