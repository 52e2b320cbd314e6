"""Exact simplex: feasibility (with strict rows) and optimization."""

import random
from fractions import Fraction

from rtpta import lp

F = Fraction


def row(coeffs, rel, rhs):
    return lp.make_row({k: F(v) for k, v in coeffs.items()}, rel, F(rhs))


class TestFeasible:
    def test_simple_box(self):
        rows = [row({"x": 1}, "<=", 5), row({"x": -1}, "<=", 0)]
        assert lp.feasible(rows)

    def test_contradiction(self):
        rows = [row({"x": 1}, "<=", 2), row({"x": -1}, "<=", -3)]
        assert not lp.feasible(rows)

    def test_strict_boundary_infeasible(self):
        rows = [row({"x": 1}, "<", 3), row({"x": -1}, "<=", -3)]
        assert not lp.feasible(rows)

    def test_strict_interior_feasible(self):
        rows = [row({"x": 1}, "<", 3), row({"x": -1}, "<", -2)]
        assert lp.feasible(rows)

    def test_equality_chain(self):
        rows = [
            row({"x": 1, "y": -1}, "=", 0),
            row({"y": 1, "z": -1}, "=", 0),
            row({"x": 1}, "=", 7),
            row({"z": 1}, "<=", 7),
            row({"z": -1}, "<=", -7),
        ]
        assert lp.feasible(rows)

    def test_degenerate_strict_point(self):
        # x >= 0, x <= 0, x < 1 is just the point 0, strict row satisfied
        rows = [
            row({"x": 1}, "<=", 0),
            row({"x": -1}, "<=", 0),
            row({"x": 1}, "<", 1),
        ]
        assert lp.feasible(rows)

    def test_empty_system_feasible(self):
        assert lp.feasible([])

    def test_constant_false_row(self):
        assert not lp.feasible([lp.make_row({}, "<=", F(-1))])


class TestOptimize:
    def test_min_on_segment(self):
        rows = [row({"x": 1, "y": 1}, "=", 10), row({"x": -1}, "<=", 0), row({"y": -1}, "<=", 0)]
        status, val, pt = lp.optimize(rows, {"x": F(1)})
        assert status == "optimal" and val == 0

    def test_max_with_witness(self):
        rows = [row({"x": 1}, "<=", 5), row({"x": -1}, "<=", 3)]
        status, val, pt = lp.optimize(rows, {"x": F(1)}, maximize=True)
        assert status == "optimal" and val == 5
        assert pt["x"] == 5

    def test_unbounded(self):
        rows = [row({"x": -1}, "<=", 0)]
        status, val, _ = lp.optimize(rows, {"x": F(1)}, maximize=True)
        assert status == "unbounded"

    def test_infeasible(self):
        rows = [row({"x": 1}, "<=", 0), row({"x": -1}, "<=", -1)]
        status, _, _ = lp.optimize(rows, {"x": F(1)})
        assert status == "infeasible"

    def test_fractional_optimum_exact(self):
        # x = 1/3 is the unique solution of 3x = 1
        rows = [row({"x": 3}, "=", 1)]
        status, val, _ = lp.optimize(rows, {"x": F(1)})
        assert status == "optimal" and val == F(1, 3)


class TestRandomizedAgainstEnumeration:
    def test_interval_systems_match_direct_reasoning(self):
        """1-D systems solved independently by interval intersection."""
        rng = random.Random(42)
        for _ in range(300):
            lo, hi = None, None
            lo_s = hi_s = False
            rows = []
            for _k in range(rng.randint(1, 5)):
                b = F(rng.randint(-10, 10), rng.randint(1, 4))
                rel = rng.choice(["<=", "<"])
                if rng.random() < 0.5:
                    rows.append(row({"x": 1}, rel, b))
                    if hi is None or b < hi or (b == hi and rel == "<"):
                        hi, hi_s = b, rel == "<"
                else:
                    rows.append(row({"x": -1}, rel, -b))
                    if lo is None or b > lo or (b == lo and rel == "<"):
                        lo, lo_s = b, rel == "<"
            if lo is None or hi is None:
                expected = True
            elif lo < hi:
                expected = True
            elif lo == hi:
                expected = not (lo_s or hi_s)
            else:
                expected = False
            assert lp.feasible(rows) == expected, rows
