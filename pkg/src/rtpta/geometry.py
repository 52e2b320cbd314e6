"""Convex polyhedra over named rational variables.

Everything is kept in constraint (half-space) representation: a polyhedron is
a canonical conjunction of linear inequalities with relations ``<``, ``<=``
or ``=``.  Strict inequalities are first-class because constraint negation
produces them, so emptiness, projection and inclusion all handle mixed
strictness exactly.

Variables carry a kind (clock or parameter); only time elapse cares about
the distinction, everything else treats variables uniformly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from . import lp
from .rationals import format_fraction, json_number, to_fraction

ZERO = Fraction(0)
ONE = Fraction(1)

CLOCK = "clock"
PARAMETER = "parameter"

LT = "<"
LE = "<="
EQ = "="

_REL_RANK = {EQ: 0, LE: 1, LT: 2}


class GeometryError(ValueError):
    """Raised on contract violations (variable mismatch, bad relation)."""


@dataclass(frozen=True, order=True)
class Var:
    """A named variable; kind is fixed at declaration."""

    name: str
    kind: str = PARAMETER

    def __post_init__(self) -> None:
        if self.kind not in (CLOCK, PARAMETER):
            raise GeometryError(f"bad variable kind {self.kind!r}")

    def __repr__(self) -> str:
        return f"{self.name}:{self.kind[0]}"


def clock(name: str) -> Var:
    return Var(name, CLOCK)


def param(name: str) -> Var:
    return Var(name, PARAMETER)


@dataclass(frozen=True)
class Inequality:
    """Canonical row ``terms . x  rel  rhs``.

    Canonical form: integer coprime coefficients, terms sorted by variable
    name, and equalities sign-fixed so the leading coefficient is positive.
    """

    terms: Tuple[Tuple[Var, Fraction], ...]
    rel: str
    rhs: Fraction

    def coeff(self, v: Var) -> Fraction:
        for var, c in self.terms:
            if var == v:
                return c
        return ZERO

    @property
    def variables(self) -> Tuple[Var, ...]:
        return tuple(v for v, _ in self.terms)

    def is_trivial(self) -> Optional[bool]:
        """True/False for constant rows, None when variables are involved."""
        if self.terms:
            return None
        if self.rel == EQ:
            return self.rhs == 0
        if self.rel == LE:
            return self.rhs >= 0
        return self.rhs > 0

    def evaluate(self, assignment: Mapping[Var, Fraction]) -> bool:
        total = ZERO
        for v, c in self.terms:
            total += c * assignment[v]
        if self.rel == EQ:
            return total == self.rhs
        if self.rel == LE:
            return total <= self.rhs
        return total < self.rhs

    def sort_key(self):
        return (
            tuple((v.name, c.numerator, c.denominator) for v, c in self.terms),
            _REL_RANK[self.rel],
            self.rhs.numerator,
            self.rhs.denominator,
        )

    def __str__(self) -> str:
        return format_inequality(self)


def make_inequality(
    coeffs: Mapping[Var, Fraction], rel: str, rhs: Fraction
) -> Inequality:
    """Build a canonical inequality from a raw coefficient map."""
    if rel not in (LT, LE, EQ):
        raise GeometryError(f"bad relation {rel!r}")
    items = [(v, Fraction(c)) for v, c in coeffs.items() if c != 0]
    items.sort(key=lambda t: t[0].name)
    rhs = Fraction(rhs)
    if items:
        scale = ONE
        den_lcm = 1
        for _, c in items:
            den_lcm = den_lcm * c.denominator // _gcd(den_lcm, c.denominator)
        den_lcm = den_lcm * rhs.denominator // _gcd(den_lcm, rhs.denominator)
        num_gcd = 0
        for _, c in items:
            num_gcd = _gcd(num_gcd, abs(c.numerator * (den_lcm // c.denominator)))
        scale = Fraction(den_lcm, num_gcd if num_gcd else 1)
        items = [(v, c * scale) for v, c in items]
        rhs = rhs * scale
        if rel == EQ and items[0][1] < 0:
            items = [(v, -c) for v, c in items]
            rhs = -rhs
    return Inequality(tuple(items), rel, rhs)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def negate(j: Inequality) -> Inequality:
    """Complement of a non-equality row: <= flips to > (stored as strict <)."""
    if j.rel == EQ:
        raise GeometryError("negate an equality by choosing a side first")
    triv = j.is_trivial()
    if triv is not None:
        raise GeometryError("refusing to negate a constant row")
    coeffs = {v: -c for v, c in j.terms}
    new_rel = LT if j.rel == LE else LE
    return make_inequality(coeffs, new_rel, -j.rhs)


def equality_sides(j: Inequality) -> Tuple[Inequality, Inequality]:
    """Split ``t = b`` into (t <= b, t >= b), the latter in <= form."""
    if j.rel != EQ:
        raise GeometryError("not an equality")
    le = make_inequality(dict(j.terms), LE, j.rhs)
    ge = make_inequality({v: -c for v, c in j.terms}, LE, -j.rhs)
    return le, ge


class Polyhedron:
    """Immutable conjunction of inequalities over a fixed variable universe."""

    __slots__ = ("variables", "inequalities", "_explicit_empty", "_empty_cache")

    def __init__(
        self,
        variables: Iterable[Var],
        inequalities: Iterable[Inequality] = (),
        _explicit_empty: bool = False,
    ):
        object.__setattr__(self, "variables", frozenset(variables))
        rows, contradictory = _canonical_rows(inequalities)
        if contradictory:
            _explicit_empty = True
            rows = ()
        for row in rows:
            for v, _ in row.terms:
                if v not in self.variables:
                    raise GeometryError(f"row mentions undeclared variable {v}")
        object.__setattr__(self, "inequalities", rows)
        object.__setattr__(self, "_explicit_empty", _explicit_empty)
        object.__setattr__(self, "_empty_cache", True if _explicit_empty else None)

    def __setattr__(self, *a):  # pragma: no cover - immutability guard
        raise AttributeError("Polyhedron is immutable")

    @staticmethod
    def universe(variables: Iterable[Var]) -> "Polyhedron":
        return Polyhedron(variables)

    @staticmethod
    def empty(variables: Iterable[Var]) -> "Polyhedron":
        return Polyhedron(variables, (), _explicit_empty=True)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polyhedron):
            return NotImplemented
        return (
            self.variables == other.variables
            and self._explicit_empty == other._explicit_empty
            and self.inequalities == other.inequalities
        )

    def __hash__(self) -> int:
        return hash((self.variables, self._explicit_empty, self.inequalities))

    def __str__(self) -> str:
        return format_polyhedron(self)

    def __repr__(self) -> str:
        return f"Polyhedron({format_polyhedron(self)})"

    # -- basic queries ----------------------------------------------------

    def is_universe(self) -> bool:
        return not self._explicit_empty and not self.inequalities

    def is_empty(self) -> bool:
        cached = self._empty_cache
        if cached is None:
            cached = self._decide_empty()
            object.__setattr__(self, "_empty_cache", cached)
        return cached

    def _decide_empty(self) -> bool:
        verdict = _propagate_bounds(self.inequalities)
        if verdict is not None:
            return verdict
        if _find_witness(self.inequalities) is not None:
            return False
        return not lp.feasible([_lp_row(r) for r in self.inequalities])

    def contains_point(self, assignment: Mapping[Var, Fraction]) -> bool:
        if self._explicit_empty:
            return False
        return all(r.evaluate(assignment) for r in self.inequalities)


def _canonical_rows(
    rows: Iterable[Inequality],
) -> Tuple[Tuple[Inequality, ...], bool]:
    """Dedupe rows, merge rows over identical term vectors, drop trivia.

    Returns (rows, contradictory): a constant-false row or an inconsistent
    same-terms pair collapses the polyhedron to the distinguished empty value.
    """
    by_terms: Dict[Tuple[Tuple[Var, Fraction], ...], Dict[str, object]] = {}
    for row in rows:
        triv = row.is_trivial()
        if triv is True:
            continue
        if triv is False:
            return (), True
        # bucket by direction-normalized term vector
        terms = row.terms
        flip = terms[0][1] < 0
        key = tuple((v, -c) for v, c in terms) if flip else terms
        b = by_terms.setdefault(
            key, {"lo": None, "lo_s": False, "hi": None, "hi_s": False}
        )
        bounds = []
        if row.rel == EQ:
            bounds = [("hi", row.rhs, False), ("lo", row.rhs, False)]
            if flip:
                bounds = [("hi", -row.rhs, False), ("lo", -row.rhs, False)]
        else:
            strict = row.rel == LT
            if flip:
                bounds = [("lo", -row.rhs, strict)]
            else:
                bounds = [("hi", row.rhs, strict)]
        for side, val, strict in bounds:
            cur = b[side]
            if side == "hi":
                if cur is None or val < cur or (val == cur and strict):
                    b["hi"], b["hi_s"] = val, strict
            else:
                if cur is None or val > cur or (val == cur and strict):
                    b["lo"], b["lo_s"] = val, strict
    out: List[Inequality] = []
    for key, b in by_terms.items():
        lo, hi = b["lo"], b["hi"]
        lo_s, hi_s = b["lo_s"], b["hi_s"]
        if lo is not None and hi is not None:
            if lo > hi or (lo == hi and (lo_s or hi_s)):
                return (), True
            if lo == hi:
                out.append(make_inequality(dict(key), EQ, hi))
                continue
        if hi is not None:
            out.append(make_inequality(dict(key), LT if hi_s else LE, hi))
        if lo is not None:
            out.append(
                make_inequality(
                    {v: -c for v, c in key}, LT if lo_s else LE, -lo
                )
            )
    out.sort(key=Inequality.sort_key)
    return tuple(out), False


def _lp_row(row: Inequality) -> lp.LpRow:
    return lp.LpRow(
        tuple((v.name, c) for v, c in row.terms), row.rel, row.rhs
    )


def _propagate_bounds(rows: Sequence[Inequality]) -> Optional[bool]:
    """Interval propagation: returns True when provably empty, else None.

    Sound for emptiness only; zone-like systems (bounds and differences) are
    almost always decided here without touching the simplex.
    """
    lo: Dict[Var, Tuple[Fraction, bool]] = {}
    hi: Dict[Var, Tuple[Fraction, bool]] = {}

    def tighten(v, bound, strict, upper) -> Optional[bool]:
        table = hi if upper else lo
        cur = table.get(v)
        if cur is None or (bound < cur[0] if upper else bound > cur[0]) or (
            bound == cur[0] and strict and not cur[1]
        ):
            table[v] = (bound, strict)
            l, h = lo.get(v), hi.get(v)
            if l and h:
                if l[0] > h[0] or (l[0] == h[0] and (l[1] or h[1])):
                    return True
        return None

    expanded = _expand_rows(rows)
    for _ in range(3):
        changed = False
        for terms, strict, rhs in expanded:
            for k, (vk, ck) in enumerate(terms):
                rest = ZERO
                rest_strict = False
                ok = True
                for i, (vi, ci) in enumerate(terms):
                    if i == k:
                        continue
                    # need a lower bound on ci*vi
                    ref = lo.get(vi) if ci > 0 else hi.get(vi)
                    if ref is None:
                        ok = False
                        break
                    rest += ci * ref[0]
                    rest_strict = rest_strict or ref[1]
                if not ok:
                    continue
                bound = (rhs - rest) / ck
                s = strict or rest_strict
                before = (hi.get(vk), lo.get(vk))
                if ck > 0:
                    if tighten(vk, bound, s, upper=True):
                        return True
                else:
                    if tighten(vk, bound, s, upper=False):
                        return True
                if before != (hi.get(vk), lo.get(vk)):
                    changed = True
        if not changed:
            break
    return None


def _expand_rows(rows: Sequence[Inequality]):
    """Rows as (terms, strict, rhs) upper-bound triples, equalities doubled."""
    expanded: List[Tuple[Tuple[Tuple[Var, Fraction], ...], bool, Fraction]] = []
    for row in rows:
        if row.rel == EQ:
            expanded.append((row.terms, False, row.rhs))
            expanded.append((tuple((v, -c) for v, c in row.terms), False, -row.rhs))
        else:
            expanded.append((row.terms, row.rel == LT, row.rhs))
    return expanded


def _find_witness(
    rows: Sequence[Inequality],
) -> Optional[Dict[Var, Fraction]]:
    """Cheap satisfiability witness for zone-shaped systems.

    Fix variables one at a time to an interior value of their locally
    propagated interval (equalities first), substituting as we go.  Sound but
    incomplete: None only means "could not find one here" and the caller
    falls back to the exact simplex.
    """
    pending = [
        [list(terms), strict, rhs] for terms, strict, rhs in _expand_rows(rows)
    ]
    assignment: Dict[Var, Fraction] = {}
    variables: List[Var] = sorted(
        {v for terms, _, _ in pending for v, _ in terms}
    )
    for _ in range(len(variables)):
        # derive the current interval of each un-fixed variable from rows
        # where it is the only remaining variable
        lo: Dict[Var, Tuple[Fraction, bool]] = {}
        hi: Dict[Var, Tuple[Fraction, bool]] = {}
        multi: Dict[Var, int] = {}
        for terms, strict, rhs in pending:
            if len(terms) == 1:
                v, c = terms[0]
                bound = rhs / c
                if c > 0:
                    cur = hi.get(v)
                    if cur is None or bound < cur[0] or (bound == cur[0] and strict):
                        hi[v] = (bound, strict)
                else:
                    cur = lo.get(v)
                    if cur is None or bound > cur[0] or (bound == cur[0] and strict):
                        lo[v] = (bound, strict)
            else:
                for v, _ in terms:
                    multi[v] = multi.get(v, 0) + 1
        todo = [v for v in variables if v not in assignment]
        if not todo:
            break
        # most-constrained first keeps later intervals alive
        todo.sort(key=lambda v: (-multi.get(v, 0), v.name))
        v = todo[0]
        l, h = lo.get(v), hi.get(v)
        if l and h:
            if l[0] > h[0] or (l[0] == h[0] and (l[1] or h[1])):
                return None
            val = l[0] if l[0] == h[0] else (l[0] + h[0]) / 2
        elif l:
            val = l[0] + 1
        elif h:
            val = h[0] - 1
        else:
            val = ZERO
        assignment[v] = val
        nxt = []
        for terms, strict, rhs in pending:
            new_terms = []
            acc = rhs
            for u, c in terms:
                if u == v:
                    acc -= c * val
                else:
                    new_terms.append((u, c))
            if not new_terms:
                if acc < 0 or (strict and acc == 0):
                    return None
                continue
            nxt.append([new_terms, strict, acc])
        pending = nxt
    if pending:
        return None
    for v in variables:
        assignment.setdefault(v, ZERO)
    return assignment


def rows_feasible(rows: Sequence[Inequality]) -> bool:
    """Exact satisfiability of a raw row list: propagation, then a witness
    attempt, then the simplex."""
    canon, contradictory = _canonical_rows(rows)
    if contradictory:
        return False
    if not canon:
        return True
    if _propagate_bounds(canon) is True:
        return False
    if _find_witness(canon) is not None:
        return True
    return lp.feasible([_lp_row(r) for r in canon])


# -- operations -----------------------------------------------------------


def _require_same_universe(a: Polyhedron, b: Polyhedron) -> None:
    if a.variables != b.variables:
        raise GeometryError("variable universes differ")


def meet(a: Polyhedron, b: Polyhedron, minimize: bool = False) -> Polyhedron:
    """Intersection; canonicalized, optionally LP-minimized."""
    _require_same_universe(a, b)
    if a._explicit_empty or b._explicit_empty:
        return Polyhedron.empty(a.variables)
    out = Polyhedron(a.variables, a.inequalities + b.inequalities)
    if minimize:
        out = remove_redundancy(out)
    return out


def meet_rows(
    p: Polyhedron, rows: Iterable[Inequality], minimize: bool = False
) -> Polyhedron:
    if p._explicit_empty:
        return p
    out = Polyhedron(p.variables, p.inequalities + tuple(rows))
    if minimize:
        out = remove_redundancy(out)
    return out


def remove_redundancy(p: Polyhedron) -> Polyhedron:
    """Drop inequalities entailed by the rest (exact LP check per row)."""
    if p._explicit_empty or len(p.inequalities) <= 1:
        return p
    if p.is_empty():
        return Polyhedron.empty(p.variables)
    kept: List[Inequality] = list(p.inequalities)
    i = 0
    while i < len(kept):
        row = kept[i]
        if row.rel == EQ:
            i += 1
            continue
        others = kept[:i] + kept[i + 1 :]
        if not rows_feasible(others + [negate(row)]):
            kept.pop(i)
        else:
            i += 1
    return Polyhedron(p.variables, kept)


def is_empty(p: Polyhedron) -> bool:
    return p.is_empty()


def satisfies(p: Polyhedron, point: Mapping[Var, Fraction]) -> bool:
    """Does the (parameter-only) polyhedron hold at the given point?"""
    if p._explicit_empty:
        return False
    missing = [v for row in p.inequalities for v in row.variables if v not in point]
    if missing:
        raise GeometryError(f"point misses assignment for {missing[0]}")
    return all(r.evaluate(point) for r in p.inequalities)


def substitute(p: Polyhedron, assignment: Mapping[Var, Fraction]) -> Polyhedron:
    """Replace some variables by constants; result lives on the remaining vars."""
    remaining = [v for v in p.variables if v not in assignment]
    if p._explicit_empty:
        return Polyhedron.empty(remaining)
    rows = []
    for row in p.inequalities:
        coeffs: Dict[Var, Fraction] = {}
        rhs = row.rhs
        for v, c in row.terms:
            if v in assignment:
                rhs -= c * assignment[v]
            else:
                coeffs[v] = c
        rows.append(make_inequality(coeffs, row.rel, rhs))
    return Polyhedron(remaining, rows)


def eliminate(
    p: Polyhedron, vars_out: Iterable[Var], minimize: bool = True
) -> Polyhedron:
    """Exact projection onto ``p.variables - vars_out`` (Fourier-Motzkin).

    Equalities are used for Gaussian substitution when available; otherwise
    upper and lower bounds are combined pairwise, a combination being strict
    when either parent is.  Intermediate systems are pruned to keep the
    doubly-exponential worst case away from these structured zones.
    """
    target = set(vars_out)
    for v in target:
        if v not in p.variables:
            raise GeometryError(f"cannot eliminate undeclared {v}")
    remaining = [v for v in p.variables if v not in target]
    if p._explicit_empty:
        return Polyhedron.empty(remaining)
    if p.is_empty():
        return Polyhedron.empty(remaining)
    rows = list(p.inequalities)
    todo = set(target)
    while todo:
        v = _pick_elimination_var(rows, todo)
        todo.discard(v)
        rows = _eliminate_one(rows, v)
        canon, contradictory = _canonical_rows(rows)
        if contradictory:
            return Polyhedron.empty(remaining)
        rows = list(canon)
        if minimize and len(rows) > 20:
            rows = list(
                remove_redundancy(
                    Polyhedron(set(p.variables) - (target - todo), rows)
                ).inequalities
            )
    return Polyhedron(remaining, rows)


def _pick_elimination_var(rows: Sequence[Inequality], todo) -> Var:
    best = None
    best_cost = None
    for v in sorted(todo):
        ups = los = 0
        has_eq = False
        for row in rows:
            c = row.coeff(v)
            if c == 0:
                continue
            if row.rel == EQ:
                has_eq = True
                break
            if c > 0:
                ups += 1
            else:
                los += 1
        cost = -1 if has_eq else ups * los - ups - los
        if best_cost is None or cost < best_cost:
            best, best_cost = v, cost
    return best


def _eliminate_one(rows: Sequence[Inequality], v: Var) -> List[Inequality]:
    keep: List[Inequality] = []
    uppers: List[Inequality] = []
    lowers: List[Inequality] = []
    eqs: List[Inequality] = []
    for row in rows:
        c = row.coeff(v)
        if c == 0:
            keep.append(row)
        elif row.rel == EQ:
            eqs.append(row)
        elif c > 0:
            uppers.append(row)
        else:
            lowers.append(row)
    if eqs:
        pivot = eqs[0]
        cv = pivot.coeff(v)
        for row in eqs[1:] + uppers + lowers:
            cr = row.coeff(v)
            coeffs = {var: c for var, c in row.terms if var != v}
            rhs = row.rhs
            scale = cr / cv
            for var, c in pivot.terms:
                if var == v:
                    continue
                coeffs[var] = coeffs.get(var, ZERO) - scale * c
            rhs -= scale * pivot.rhs
            keep.append(make_inequality(coeffs, row.rel, rhs))
        return keep
    for up in uppers:
        cu = up.coeff(v)
        for lo_row in lowers:
            cl = lo_row.coeff(v)  # negative
            # combine: up/cu + lo/(-cl), coefficient of v cancels
            coeffs: Dict[Var, Fraction] = {}
            for var, c in up.terms:
                if var != v:
                    coeffs[var] = coeffs.get(var, ZERO) + c / cu
            for var, c in lo_row.terms:
                if var != v:
                    coeffs[var] = coeffs.get(var, ZERO) + c / (-cl)
            rhs = up.rhs / cu + lo_row.rhs / (-cl)
            rel = LT if (up.rel == LT or lo_row.rel == LT) else LE
            keep.append(make_inequality(coeffs, rel, rhs))
    return keep


@dataclass(frozen=True)
class SlopeVector:
    """Per-clock rates (0 stops a stopwatch, 1 lets it run)."""

    rates: Tuple[Tuple[Var, int], ...]

    @staticmethod
    def of(rates: Mapping[Var, int]) -> "SlopeVector":
        for v, r in rates.items():
            if v.kind != CLOCK:
                raise GeometryError(f"slope given for non-clock {v}")
            if r not in (0, 1):
                raise GeometryError(f"slope must be 0 or 1, got {r}")
        return SlopeVector(tuple(sorted(rates.items(), key=lambda t: t[0].name)))

    def rate(self, v: Var) -> int:
        for var, r in self.rates:
            if var == v:
                return r
        raise GeometryError(f"no slope for {v}")


def time_elapse(p: Polyhedron, slopes: SlopeVector) -> Polyhedron:
    """Forward time closure: ``{ v + t*slopes | v in p, t >= 0 }``.

    Parameters implicitly have rate 0.  Computed by substituting x -> x - t*s
    for the running clocks, adding t >= 0 and eliminating the fresh t.
    """
    if p._explicit_empty or p.is_universe():
        return p
    clocks = [v for v in p.variables if v.kind == CLOCK]
    running = {v for v in clocks if slopes.rate(v) == 1}
    t = Var("__elapse", CLOCK)
    if t in p.variables:
        raise GeometryError("reserved variable name __elapse in universe")
    rows: List[Inequality] = []
    for row in p.inequalities:
        coeffs = dict(row.terms)
        drift = sum((c for v, c in row.terms if v in running), ZERO)
        if drift != 0:
            coeffs[t] = -drift
        rows.append(make_inequality(coeffs, row.rel, row.rhs))
    rows.append(make_inequality({t: -ONE}, LE, ZERO))
    lifted = Polyhedron(set(p.variables) | {t}, rows)
    out = eliminate(lifted, {t}, minimize=False)
    return Polyhedron(p.variables, out.inequalities)


def includes(a: Polyhedron, b: Polyhedron) -> bool:
    """Solution-set containment b <= a, decided by emptiness of b & not(row)."""
    _require_same_universe(a, b)
    if b.is_empty():
        return True
    if a._explicit_empty:
        return False
    b_rows = list(b.inequalities)
    for row in a.inequalities:
        if row in b.inequalities:
            continue
        sides = equality_sides(row) if row.rel == EQ else (row,)
        for side in sides:
            if not rows_feasible(b_rows + [negate(side)]):
                continue
            return False
    return True


def convex_hull(a: Polyhedron, b: Polyhedron) -> Polyhedron:
    """Smallest closed convex polyhedron containing the union.

    Standard lifted construction: points z = x' + y' with x' in lam*A,
    y' in (1-lam)*B, 0 <= lam <= 1, then eliminate the auxiliaries.  Strict
    operand rows are relaxed, so the result is the topological closure of
    the exact hull (identical whenever both operands are closed).
    """
    _require_same_universe(a, b)
    if a.is_empty():
        return b
    if b.is_empty():
        return a
    lam = Var("__lam", PARAMETER)
    prime = {v: Var(f"__h_{v.name}", v.kind) for v in a.variables}
    aux = [lam] + list(prime.values())
    for v in aux:
        if v in a.variables:
            raise GeometryError("reserved hull variable collides")
    rows: List[Inequality] = []
    for row in a.inequalities:
        coeffs = {prime[v]: c for v, c in row.terms}
        coeffs[lam] = -row.rhs
        rows.append(
            make_inequality(coeffs, EQ if row.rel == EQ else LE, ZERO)
        )
    for row in b.inequalities:
        coeffs: Dict[Var, Fraction] = {}
        for v, c in row.terms:
            coeffs[v] = coeffs.get(v, ZERO) + c
            coeffs[prime[v]] = coeffs.get(prime[v], ZERO) - c
        coeffs[lam] = coeffs.get(lam, ZERO) + row.rhs
        rows.append(
            make_inequality(coeffs, EQ if row.rel == EQ else LE, row.rhs)
        )
    rows.append(make_inequality({lam: ONE}, LE, ONE))
    rows.append(make_inequality({lam: -ONE}, LE, ZERO))
    lifted = Polyhedron(set(a.variables) | set(aux), rows)
    out = eliminate(lifted, set(aux), minimize=True)
    return Polyhedron(a.variables, out.inequalities)


def var_interval(
    p: Polyhedron, v: Var
) -> Tuple[Optional[Fraction], bool, Optional[Fraction], bool]:
    """Exact (lo, lo_attained, hi, hi_attained) of one coordinate.

    None means unbounded on that side.  Attainment is decided with the strict
    rows in place, so open tile boundaries report attained=False.
    """
    if p.is_empty():
        raise GeometryError("interval of empty polyhedron")
    rows = [_lp_row(r) for r in p.inequalities]
    obj = {v.name: ONE}
    status, lo_val, _ = lp.optimize(rows, obj, maximize=False)
    lo = lo_val if status == "optimal" else None
    status, hi_val, _ = lp.optimize(rows, obj, maximize=True)
    hi = hi_val if status == "optimal" else None
    lo_att = hi_att = False
    if lo is not None:
        lo_att = lp.feasible(rows + [lp.make_row({v.name: ONE}, lp.REL_EQ, lo)])
    if hi is not None:
        hi_att = lp.feasible(rows + [lp.make_row({v.name: ONE}, lp.REL_EQ, hi)])
    return lo, lo_att, hi, hi_att


def sample_point(
    p: Polyhedron, rng: random.Random, order: Optional[Sequence[Var]] = None
) -> Dict[Var, Fraction]:
    """Draw an exact member point, interior in every non-degenerate direction.

    Coordinates are fixed one at a time: query the exact interval of the next
    variable in the current slice, pick a rational inside, substitute, repeat.
    Works for lower-dimensional sets (segments, points) where box sampling
    would never hit.
    """
    if p.is_empty():
        raise GeometryError("cannot sample the empty polyhedron")
    todo = list(order) if order is not None else sorted(p.variables)
    current = p
    chosen: Dict[Var, Fraction] = {}
    for v in todo:
        lo, lo_att, hi, hi_att = var_interval(current, v)
        if lo is None and hi is None:
            val = Fraction(rng.randint(-100, 100))
        elif lo is None:
            val = hi - Fraction(rng.randint(1, 50)) if not hi_att else hi - (
                Fraction(rng.randint(0, 50))
            )
        elif hi is None:
            val = lo + Fraction(rng.randint(1, 50)) if not lo_att else lo + (
                Fraction(rng.randint(0, 50))
            )
        elif lo == hi:
            val = lo
        else:
            num = rng.randint(1, 127)
            val = lo + (hi - lo) * Fraction(num, 128)
        chosen[v] = val
        current = substitute(current, {v: val})
        if current.is_empty():  # numeric edge: retry once at midpoint
            if lo is not None and hi is not None and lo != hi:
                val = lo + (hi - lo) / 2
                chosen[v] = val
                current = substitute(p, {u: chosen[u] for u in chosen})
        assert not current.is_empty(), "sampler left the polyhedron"
    return chosen


# -- serialization ---------------------------------------------------------


def format_inequality(row: Inequality) -> str:
    """Human form; prefers positive leading coefficients (flips to >=, >)."""
    triv = row.is_trivial()
    if triv is not None:
        return "true" if triv else "false"
    terms, rel, rhs = row.terms, row.rel, row.rhs
    if terms[0][1] < 0 and rel != EQ:
        terms = tuple((v, -c) for v, c in terms)
        rhs = -rhs
        rel = {LE: ">=", LT: ">"}[rel]
    parts: List[str] = []
    for i, (v, c) in enumerate(terms):
        if c < 0:
            prefix = "- " if i else "-"
            mag = -c
        else:
            prefix = "+ " if i else ""
            mag = c
        if mag == 1:
            parts.append(f"{prefix}{v.name}")
        else:
            parts.append(f"{prefix}{format_fraction(mag)}*{v.name}")
    return f"{' '.join(parts)} {rel} {format_fraction(rhs)}"


def format_polyhedron(p: Polyhedron) -> str:
    if p._explicit_empty:
        return "false"
    if not p.inequalities:
        return "true"
    return " & ".join(format_inequality(r) for r in p.inequalities)


_TEXT_RELS = ["<=", ">=", "==", "<", ">", "="]


def parse_polyhedron(text: str, variables: Iterable[Var]) -> Polyhedron:
    """Parse the ``&``-joined textual form back into a polyhedron."""
    vars_by_name = {v.name: v for v in variables}
    text = text.strip()
    if text in ("true", ""):
        return Polyhedron.universe(vars_by_name.values())
    if text == "false":
        return Polyhedron.empty(vars_by_name.values())
    rows = []
    for chunk in text.split("&"):
        rows.append(_parse_row(chunk.strip(), vars_by_name))
    return Polyhedron(vars_by_name.values(), rows)


def _parse_row(chunk: str, vars_by_name: Dict[str, Var]) -> Inequality:
    rel_found = None
    for rel in _TEXT_RELS:
        if rel in chunk:
            rel_found = rel
            break
    if rel_found is None:
        raise GeometryError(f"no relation in {chunk!r}")
    left, right = chunk.split(rel_found, 1)
    lc, lk = _parse_expr(left, vars_by_name)
    rc, rk = _parse_expr(right, vars_by_name)
    coeffs = {v: lc.get(v, ZERO) - rc.get(v, ZERO) for v in set(lc) | set(rc)}
    rhs = rk - lk
    rel_map = {"<=": LE, "<": LT, "=": EQ, "==": EQ, ">=": LE, ">": LT}
    if rel_found in (">=", ">"):
        coeffs = {v: -c for v, c in coeffs.items()}
        rhs = -rhs
    return make_inequality(coeffs, rel_map[rel_found], rhs)


def _parse_expr(
    text: str, vars_by_name: Dict[str, Var]
) -> Tuple[Dict[Var, Fraction], Fraction]:
    coeffs: Dict[Var, Fraction] = {}
    const = ZERO
    tokens = text.replace("-", "+-").split("+")
    for tok in tokens:
        tok = tok.strip()
        if not tok:
            continue
        sign = ONE
        if tok.startswith("-"):
            sign = -ONE
            tok = tok[1:].strip()
        if "*" in tok:
            num, name = tok.split("*", 1)
            name = name.strip()
            if name not in vars_by_name:
                raise GeometryError(f"unknown variable {name!r}")
            v = vars_by_name[name]
            coeffs[v] = coeffs.get(v, ZERO) + sign * to_fraction(num.strip())
        elif tok in vars_by_name:
            v = vars_by_name[tok]
            coeffs[v] = coeffs.get(v, ZERO) + sign
        else:
            const += sign * to_fraction(tok)
    return coeffs, const


def inequality_to_json(row: Inequality) -> dict:
    return {
        "lhs": {v.name: format_fraction(c) for v, c in row.terms},
        "rel": row.rel,
        "rhs": format_fraction(row.rhs),
    }


def polyhedron_to_json(p: Polyhedron) -> object:
    if p._explicit_empty:
        return "empty"
    return [inequality_to_json(r) for r in p.inequalities]


def polyhedron_from_json(data: object, variables: Iterable[Var]) -> Polyhedron:
    vars_by_name = {v.name: v for v in variables}
    if data == "empty":
        return Polyhedron.empty(vars_by_name.values())
    if not isinstance(data, list):
        raise GeometryError("polyhedron JSON must be a list or 'empty'")
    rel_map = {"<=": LE, "<": LT, "=": EQ, "==": EQ, ">=": LE, ">": LT}
    rows = []
    for item in data:
        coeffs = {}
        for name, c in item["lhs"].items():
            if name not in vars_by_name:
                raise GeometryError(f"unknown variable {name!r}")
            coeffs[vars_by_name[name]] = to_fraction(c)
        rel = item["rel"]
        rhs = to_fraction(item["rhs"])
        if rel in (">=", ">"):
            coeffs = {v: -c for v, c in coeffs.items()}
            rhs = -rhs
        rows.append(make_inequality(coeffs, rel_map[rel], rhs))
    return Polyhedron(vars_by_name.values(), rows)


def bounding_values(p: Polyhedron) -> Dict[Var, Tuple[object, object]]:
    """Exact per-variable (lo, hi) pairs, None for unbounded sides."""
    out = {}
    for v in sorted(p.variables):
        lo, _, hi, _ = var_interval(p, v)
        out[v] = (lo, hi)
    return out


__all__ = [
    "CLOCK",
    "PARAMETER",
    "LT",
    "LE",
    "EQ",
    "GeometryError",
    "Var",
    "clock",
    "param",
    "Inequality",
    "make_inequality",
    "negate",
    "equality_sides",
    "Polyhedron",
    "SlopeVector",
    "meet",
    "meet_rows",
    "remove_redundancy",
    "is_empty",
    "satisfies",
    "substitute",
    "eliminate",
    "time_elapse",
    "includes",
    "convex_hull",
    "var_interval",
    "sample_point",
    "format_inequality",
    "format_polyhedron",
    "parse_polyhedron",
    "inequality_to_json",
    "polyhedron_to_json",
    "polyhedron_from_json",
    "bounding_values",
    "json_number",
]
