"""Exact linear programming over rationals.

A small dense two-phase simplex with Bland's rule, used by the geometry layer
for emptiness, inclusion, redundancy and bound queries.  Systems are tiny
(tens of rows, around a dozen variables) so a plain tableau of Fractions is
fast enough and keeps everything exact.

Strict inequalities are decided with the classical epsilon trick: every
strict row ``a.x < b`` becomes ``a.x + eps <= b`` and we maximize ``eps``
(capped at 1); the original mixed system is feasible iff the optimum is
positive.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

ZERO = Fraction(0)
ONE = Fraction(1)

REL_LE = "<="
REL_LT = "<"
REL_EQ = "="


@dataclass(frozen=True)
class LpRow:
    """One constraint ``coeffs . x  rel  rhs`` with rel in {<=, <, =}."""

    coeffs: Tuple[Tuple[str, Fraction], ...]
    rel: str
    rhs: Fraction


def make_row(coeffs: Dict[str, Fraction], rel: str, rhs: Fraction) -> LpRow:
    items = tuple(sorted((v, c) for v, c in coeffs.items() if c != 0))
    return LpRow(items, rel, rhs)


class _Tableau:
    """Dense simplex tableau: minimize c.y subject to A y = b, y >= 0."""

    def __init__(self, rows: List[List[Fraction]], rhs: List[Fraction]):
        self.rows = rows
        self.rhs = rhs
        self.ncols = len(rows[0]) if rows else 0
        self.basis: List[int] = []

    def pivot(self, r: int, c: int) -> None:
        piv = self.rows[r][c]
        inv = ONE / piv
        row_r = self.rows[r]
        for j in range(self.ncols):
            row_r[j] *= inv
        self.rhs[r] *= inv
        for i, row in enumerate(self.rows):
            if i == r:
                continue
            f = row[c]
            if f == 0:
                continue
            for j in range(self.ncols):
                row[j] -= f * row_r[j]
            self.rhs[i] -= f * self.rhs[r]
        self.basis[r] = c

    def reduced_costs(self, cost: List[Fraction]) -> List[Fraction]:
        red = cost[:]
        for i, bi in enumerate(self.basis):
            cb = cost[bi]
            if cb == 0:
                continue
            row = self.rows[i]
            for j in range(self.ncols):
                if row[j] != 0:
                    red[j] -= cb * row[j]
        return red

    def objective(self, cost: List[Fraction]) -> Fraction:
        total = ZERO
        for i, bi in enumerate(self.basis):
            if cost[bi] != 0:
                total += cost[bi] * self.rhs[i]
        return total

    def minimize(self, cost: List[Fraction]) -> str:
        """Run simplex with Bland's rule; returns 'optimal' or 'unbounded'."""
        while True:
            red = self.reduced_costs(cost)
            enter = -1
            for j in range(self.ncols):
                if red[j] < 0:
                    enter = j
                    break
            if enter < 0:
                return "optimal"
            leave = -1
            best: Optional[Fraction] = None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = self.rhs[i] / a
                    if best is None or ratio < best or (
                        ratio == best and self.basis[i] < self.basis[leave]
                    ):
                        best = ratio
                        leave = i
            if leave < 0:
                return "unbounded"
            self.pivot(leave, enter)


class _Problem:
    """Translate free-variable rows into standard form and solve."""

    def __init__(self, rows: Sequence[LpRow], extra_vars: Iterable[str] = ()):
        names = set(extra_vars)
        for row in rows:
            for v, _ in row.coeffs:
                names.add(v)
        self.vars = sorted(names)
        self.vindex = {v: i for i, v in enumerate(self.vars)}
        self.rows = list(rows)
        # column layout: x+ (n), x- (n), slacks (one per inequality row)
        self.n = len(self.vars)
        self.nslack = sum(1 for r in self.rows if r.rel != REL_EQ)
        self.ncols = 2 * self.n + self.nslack

    def build(self, strict_eps: bool) -> Tuple[_Tableau, int]:
        """Dense constraint matrix; returns tableau (without artificials) and
        the eps column index (or -1)."""
        eps_col = -1
        ncols = self.ncols
        if strict_eps:
            eps_col = ncols
            ncols += 1
        mat: List[List[Fraction]] = []
        rhs: List[Fraction] = []
        slack_at = 0
        for row in self.rows:
            line = [ZERO] * ncols
            for v, c in row.coeffs:
                i = self.vindex[v]
                line[i] = c
                line[self.n + i] = -c
            if row.rel != REL_EQ:
                line[2 * self.n + slack_at] = ONE
                slack_at += 1
            if strict_eps and row.rel == REL_LT:
                line[eps_col] = ONE
            mat.append(line)
            rhs.append(row.rhs)
        tab = _Tableau(mat, rhs)
        tab.ncols = ncols
        return tab, eps_col

    def solve(
        self,
        objective: Optional[Dict[str, Fraction]] = None,
        maximize: bool = False,
        strict_eps: bool = False,
        eps_objective: bool = False,
    ) -> Tuple[str, Optional[Fraction], Optional[Dict[str, Fraction]]]:
        tab, eps_col = self.build(strict_eps)
        if strict_eps and eps_col >= 0:
            # eps <= 1 cap keeps the eps maximization bounded
            cap = [ZERO] * tab.ncols
            cap[eps_col] = ONE
            for row in tab.rows:
                row.append(ZERO)
            cap.append(ONE)
            tab.ncols += 1
            tab.rows.append(cap)
            tab.rhs.append(ONE)
        m = len(tab.rows)
        if m == 0:
            if objective and any(c != 0 for c in objective.values()):
                return "unbounded", None, None
            return "optimal", ZERO, {v: ZERO for v in self.vars}
        # phase 1: artificial per row, rhs made nonnegative first
        for i in range(m):
            if tab.rhs[i] < 0:
                tab.rows[i] = [-v for v in tab.rows[i]]
                tab.rhs[i] = -tab.rhs[i]
        base = tab.ncols
        for i, row in enumerate(tab.rows):
            row.extend(ONE if j == i else ZERO for j in range(m))
        tab.ncols += m
        tab.basis = [base + i for i in range(m)]
        cost1 = [ZERO] * tab.ncols
        for j in range(base, tab.ncols):
            cost1[j] = ONE
        tab.minimize(cost1)
        if tab.objective(cost1) != 0:
            return "infeasible", None, None
        # drive remaining artificials out of the basis
        drop_rows = []
        for i in range(m):
            if tab.basis[i] >= base:
                piv = next(
                    (j for j in range(base) if tab.rows[i][j] != 0), None
                )
                if piv is None:
                    drop_rows.append(i)
                else:
                    tab.pivot(i, piv)
        if drop_rows:
            keep = [i for i in range(m) if i not in set(drop_rows)]
            tab.rows = [tab.rows[i] for i in keep]
            tab.rhs = [tab.rhs[i] for i in keep]
            tab.basis = [tab.basis[i] for i in keep]
        for row in tab.rows:
            del row[base:]
        tab.ncols = base
        # phase 2
        cost2 = [ZERO] * tab.ncols
        if eps_objective and eps_col >= 0:
            cost2[eps_col] = -ONE  # maximize eps
        elif objective:
            sign = -ONE if maximize else ONE
            for v, c in objective.items():
                if v not in self.vindex:
                    continue
                i = self.vindex[v]
                cost2[i] += sign * c
                cost2[self.n + i] -= sign * c
        status = tab.minimize(cost2)
        if status == "unbounded":
            return "unbounded", None, None
        value = tab.objective(cost2)
        if eps_objective or maximize:
            value = -value
        point: Dict[str, Fraction] = {v: ZERO for v in self.vars}
        for i, bi in enumerate(tab.basis):
            if bi < self.n:
                point[self.vars[bi]] += tab.rhs[i]
            elif bi < 2 * self.n:
                point[self.vars[bi - self.n]] -= tab.rhs[i]
        if eps_objective and eps_col >= 0:
            eps_val = ZERO
            for i, bi in enumerate(tab.basis):
                if bi == eps_col:
                    eps_val = tab.rhs[i]
            return "optimal", eps_val, point
        return "optimal", value, point


def check_constant_rows(rows: Sequence[LpRow]) -> Optional[List[LpRow]]:
    """Evaluate variable-free rows; None if one is false, else remaining rows."""
    live = []
    for row in rows:
        if row.coeffs:
            live.append(row)
            continue
        v = ZERO
        ok = v < row.rhs if row.rel == REL_LT else (
            v <= row.rhs if row.rel == REL_LE else v == row.rhs
        )
        if not ok:
            return None
    return live


def feasible(rows: Sequence[LpRow]) -> bool:
    """Exact feasibility of a mixed strict/non-strict rational system."""
    live = check_constant_rows(rows)
    if live is None:
        return False
    if not live:
        return True
    has_strict = any(r.rel == REL_LT for r in live)
    prob = _Problem(live)
    if not has_strict:
        status, _, _ = prob.solve()
        return status != "infeasible"
    status, eps, _ = prob.solve(strict_eps=True, eps_objective=True)
    if status == "infeasible":
        return False
    assert status == "optimal" and eps is not None
    return eps > 0


def optimize(
    rows: Sequence[LpRow],
    objective: Dict[str, Fraction],
    maximize: bool = False,
) -> Tuple[str, Optional[Fraction], Optional[Dict[str, Fraction]]]:
    """Optimize over the closed relaxation (strict rows treated as non-strict).

    For a nonempty system the returned value is the exact infimum/supremum of
    the objective over the original mixed system; whether it is attained is a
    separate `feasible` query.  Returns (status, value, witness_point).
    """
    live = check_constant_rows(rows)
    if live is None:
        return "infeasible", None, None
    prob = _Problem(live, extra_vars=objective.keys())
    return prob.solve(objective=objective, maximize=maximize)
