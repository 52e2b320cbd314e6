"""Geometry layer: canonical forms, meet, projection, elapse, hull, inclusion.

The heavier randomized checks (the sampled-extension projection oracle and
the merge/hull sampling) live in test_acceptance.py; this file covers the
frozen worked examples and the algebraic invariants.
"""

import random
from fractions import Fraction

import pytest

from rtpta import geometry as g

F = Fraction


def ineq(coeffs, rel, rhs):
    return g.make_inequality(coeffs, rel, F(rhs))


@pytest.fixture
def xy():
    return g.param("x"), g.param("y")


def box(v, lo, hi):
    return [
        ineq({v: -1}, g.LE, -lo),
        ineq({v: 1}, g.LE, hi),
    ]


class TestCanonical:
    def test_lowest_terms_scaling(self, xy):
        x, y = xy
        a = ineq({x: F(2, 3), y: F(4, 3)}, g.LE, F(2))
        b = ineq({x: 1, y: 2}, g.LE, 3)
        assert a.terms == b.terms
        assert a.rhs == b.rhs

    def test_equality_sign_fixed(self, xy):
        x, y = xy
        a = ineq({x: -2, y: 4}, g.EQ, -6)
        b = ineq({x: 1, y: -2}, g.EQ, 3)
        assert a == b

    def test_same_terms_merge_to_equality(self, xy):
        x, _ = xy
        p = g.Polyhedron([x], [ineq({x: 1}, g.LE, 3), ineq({x: -1}, g.LE, -3)])
        assert p.inequalities == (ineq({x: 1}, g.EQ, 3),)

    def test_contradictory_bounds_collapse(self, xy):
        x, _ = xy
        p = g.Polyhedron([x], [ineq({x: 1}, g.LE, 2), ineq({x: -1}, g.LE, -3)])
        assert p.is_empty()

    def test_canonical_order_is_deterministic(self, xy):
        x, y = xy
        rows = [ineq({y: 1}, g.LE, 2), ineq({x: 1}, g.LE, 1), ineq({x: 1, y: 1}, g.LE, 5)]
        p1 = g.Polyhedron([x, y], rows)
        p2 = g.Polyhedron([x, y], list(reversed(rows)))
        assert p1.inequalities == p2.inequalities


class TestMeet:
    def test_interval_intersection(self, xy):
        x, _ = xy
        a = g.Polyhedron([x], [ineq({x: -1}, g.LE, 0)])
        b = g.Polyhedron([x], [ineq({x: 1}, g.LE, 5)])
        m = g.meet(a, b)
        assert not m.is_empty()
        assert m.contains_point({x: F(3)})
        assert not m.contains_point({x: F(6)})

    def test_universe_identity(self, xy):
        x, y = xy
        p = g.Polyhedron([x, y], box(x, 0, 1))
        assert g.meet(p, g.Polyhedron.universe([x, y])) == p

    def test_disjoint_half_lines(self, xy):
        x, _ = xy
        a = g.Polyhedron([x], [ineq({x: -1}, g.LE, -3)])
        b = g.Polyhedron([x], [ineq({x: 1}, g.LE, 2)])
        assert g.meet(a, b).is_empty()

    def test_universe_mismatch_rejected(self, xy):
        x, y = xy
        with pytest.raises(g.GeometryError):
            g.meet(g.Polyhedron.universe([x]), g.Polyhedron.universe([x, y]))


class TestEmptiness:
    def test_explicit_empty(self, xy):
        x, _ = xy
        assert g.Polyhedron.empty([x]).is_empty()

    def test_strict_nonstrict_interaction(self, xy):
        x, _ = xy
        p = g.Polyhedron([x], [ineq({x: -1}, g.LE, -3), ineq({x: 1}, g.LT, 3)])
        assert p.is_empty()

    def test_strict_open_interval_nonempty(self, xy):
        x, _ = xy
        p = g.Polyhedron([x], [ineq({x: -1}, g.LT, -3), ineq({x: 1}, g.LT, 4)])
        assert not p.is_empty()

    def test_simplex_fallback_on_triangle(self, xy):
        x, y = xy
        # x + y <= 1, x >= 0, y >= 0, x + y > 1 - needs more than intervals
        p = g.Polyhedron(
            [x, y],
            [
                ineq({x: 1, y: 1}, g.LE, 1),
                ineq({x: -1}, g.LE, 0),
                ineq({y: -1}, g.LE, 0),
                ineq({x: -1, y: -1}, g.LT, -1),
            ],
        )
        assert p.is_empty()


class TestEliminate:
    def test_chained_bound(self, xy):
        x, y = xy
        p = g.Polyhedron([x, y], [ineq({y: 1, x: -1}, g.LE, 0), ineq({x: 1}, g.LE, 3)])
        q = g.eliminate(p, {x})
        assert q.variables == frozenset([y])
        assert q.inequalities == (ineq({y: 1}, g.LE, 3),)

    def test_unbounded_projection_is_universe(self, xy):
        x, y = xy
        p = g.Polyhedron([x, y], [ineq({y: 1, x: -1}, g.LE, 0)])
        q = g.eliminate(p, {x})
        assert q.is_universe()

    def test_gaussian_substitution_via_equality(self, xy):
        x, y = xy
        p = g.Polyhedron(
            [x, y], [ineq({x: 1, y: -2}, g.EQ, 0), ineq({x: 1}, g.LE, 6)]
        )
        q = g.eliminate(p, {x})
        assert q.inequalities == (ineq({y: 1}, g.LE, 3),)

    def test_strictness_propagates(self, xy):
        x, y = xy
        p = g.Polyhedron(
            [x, y], [ineq({y: 1, x: -1}, g.LT, 0), ineq({x: 1}, g.LE, 3)]
        )
        q = g.eliminate(p, {x})
        assert q.inequalities == (ineq({y: 1}, g.LT, 3),)


class TestTimeElapse:
    def setup_method(self):
        self.c = g.clock("c")
        self.d = g.clock("d")

    def poly(self, rows):
        return g.Polyhedron([self.c, self.d], rows)

    def test_synchronous_clocks(self):
        start = self.poly([ineq({self.c: 1}, g.EQ, 0), ineq({self.d: 1}, g.EQ, 0)])
        slopes = g.SlopeVector.of({self.c: 1, self.d: 1})
        out = g.time_elapse(start, slopes)
        assert out.contains_point({self.c: F(5), self.d: F(5)})
        assert not out.contains_point({self.c: F(5), self.d: F(6)})
        assert not out.contains_point({self.c: F(-1), self.d: F(-1)})

    def test_stopped_stopwatch(self):
        start = self.poly([ineq({self.c: 1}, g.EQ, 0), ineq({self.d: 1}, g.EQ, 0)])
        slopes = g.SlopeVector.of({self.c: 0, self.d: 1})
        out = g.time_elapse(start, slopes)
        assert out.contains_point({self.c: F(0), self.d: F(7)})
        assert not out.contains_point({self.c: F(1), self.d: F(7)})

    def test_idempotent_and_contains_start(self):
        rng = random.Random(7)
        for _ in range(20):
            lo_c, lo_d = F(rng.randint(0, 5)), F(rng.randint(0, 5))
            start = self.poly(
                [
                    ineq({self.c: -1}, g.LE, -lo_c),
                    ineq({self.c: 1}, g.LE, lo_c + 2),
                    ineq({self.d: -1}, g.LE, -lo_d),
                    ineq({self.d: 1}, g.LE, lo_d + 1),
                ]
            )
            slopes = g.SlopeVector.of(
                {self.c: rng.randint(0, 1), self.d: rng.randint(0, 1)}
            )
            once = g.time_elapse(start, slopes)
            twice = g.time_elapse(once, slopes)
            assert g.includes(once, start)
            assert g.includes(once, twice) and g.includes(twice, once)

    def test_parameters_unaffected(self):
        t = g.param("T")
        p = g.Polyhedron(
            [self.c, t],
            [ineq({self.c: 1}, g.EQ, 0), ineq({t: 1}, g.LE, 9), ineq({t: -1}, g.LE, -1)],
        )
        out = g.time_elapse(p, g.SlopeVector.of({self.c: 1}))
        proj = g.eliminate(out, {self.c})
        assert proj.inequalities == (
            g.eliminate(p, {self.c}).inequalities
        )


class TestSatisfies:
    def test_point_constraint(self):
        t1, t2 = g.param("T1"), g.param("T2")
        p = g.Polyhedron(
            [t1, t2], [ineq({t1: 1}, g.EQ, 60), ineq({t2: 1}, g.EQ, 120)]
        )
        assert g.satisfies(p, {t1: F(60), t2: F(120)})
        assert not g.satisfies(p, {t1: F(61), t2: F(120)})

    def test_universe_always_true(self):
        t1 = g.param("T1")
        assert g.satisfies(g.Polyhedron.universe([t1]), {t1: F(5)})

    def test_interval_bounds(self):
        t1 = g.param("T1")
        p = g.Polyhedron([t1], box(t1, 56, 79))
        assert g.satisfies(p, {t1: F(60)})
        assert not g.satisfies(p, {t1: F(80)})


class TestIncludes:
    def test_universe_includes_all(self, xy):
        x, _ = xy
        assert g.includes(g.Polyhedron.universe([x]), g.Polyhedron([x], box(x, 0, 1)))

    def test_halfline_ordering(self, xy):
        x, _ = xy
        wide = g.Polyhedron([x], [ineq({x: -1}, g.LE, 0)])
        narrow = g.Polyhedron([x], [ineq({x: -1}, g.LE, -1)])
        assert g.includes(wide, narrow)
        assert not g.includes(narrow, wide)

    def test_mutual_inclusion_same_solutions(self, xy):
        x, y = xy
        a = g.Polyhedron([x, y], [ineq({x: 1, y: 1}, g.LE, 2)] + box(x, 0, 1))
        b = g.Polyhedron([x, y], box(x, 0, 1) + [ineq({x: 2, y: 2}, g.LE, 4)])
        assert g.includes(a, b) and g.includes(b, a)


class TestConvexHull:
    def test_one_dim_hull(self, xy):
        x, _ = xy
        a = g.Polyhedron([x], box(x, 0, 1))
        b = g.Polyhedron([x], box(x, 2, 3))
        h = g.convex_hull(a, b)
        assert h.contains_point({x: F(3, 2)})
        assert not h.contains_point({x: F(4)})
        assert g.includes(h, a) and g.includes(h, b)

    def test_idempotent(self, xy):
        x, y = xy
        p = g.Polyhedron([x, y], box(x, 0, 1) + box(y, 0, 1))
        h = g.convex_hull(p, p)
        assert g.includes(h, p) and g.includes(p, h)

    def test_segments_on_line_merge(self, xy):
        # [20,26] x {y=0} and [27,34] x {y=0} hull to [20,34] x {y=0}
        x, y = xy
        a = g.Polyhedron([x, y], box(x, 20, 26) + [ineq({y: 1}, g.EQ, 0)])
        b = g.Polyhedron([x, y], box(x, 27, 34) + [ineq({y: 1}, g.EQ, 0)])
        h = g.convex_hull(a, b)
        expect = g.Polyhedron([x, y], box(x, 20, 34) + [ineq({y: 1}, g.EQ, 0)])
        assert g.includes(h, expect) and g.includes(expect, h)

    def test_empty_operand_returns_other(self, xy):
        x, _ = xy
        a = g.Polyhedron([x], box(x, 0, 1))
        assert g.convex_hull(a, g.Polyhedron.empty([x])) == a


class TestNegate:
    def test_le_flips_to_strict(self):
        t1 = g.param("T1")
        j = ineq({t1: 1}, g.LE, 55)
        nj = g.negate(j)
        # T1 > 55, stored as -T1 < -55
        assert nj.rel == g.LT
        assert nj.evaluate({t1: F(56)})
        assert not nj.evaluate({t1: F(55)})

    def test_strict_flips_to_closed(self):
        t2 = g.param("T2")
        j = ineq({t2: 1}, g.LT, 112)
        nj = g.negate(j)
        assert nj.rel == g.LE
        assert nj.evaluate({t2: F(112)})

    def test_involution(self):
        t1 = g.param("T1")
        for j in (ineq({t1: 1}, g.LE, 55), ineq({t1: -3}, g.LT, 7)):
            assert g.negate(g.negate(j)) == j

    def test_equality_refused(self):
        t1 = g.param("T1")
        with pytest.raises(g.GeometryError):
            g.negate(ineq({t1: 1}, g.EQ, 3))


class TestSerialization:
    def test_text_round_trip(self):
        t1, t2 = g.param("T1"), g.param("T2")
        p = g.Polyhedron(
            [t1, t2],
            [
                ineq({t1: -1}, g.LE, -56),
                ineq({t1: 1}, g.LE, 79),
                ineq({t2: -1}, g.LE, -112),
            ],
        )
        text = g.format_polyhedron(p)
        assert "T1" in text and "&" in text
        back = g.parse_polyhedron(text, [t1, t2])
        assert back == p

    def test_paper_style_text_parses(self):
        t1, t2 = g.param("T1"), g.param("T2")
        p = g.parse_polyhedron("56 <= T1 & T1 <= 79 & T2 >= 112", [t1, t2])
        assert g.satisfies(p, {t1: F(60), t2: F(120)})
        assert not g.satisfies(p, {t1: F(80), t2: F(120)})

    def test_json_round_trip_exact(self):
        x = g.param("x")
        p = g.Polyhedron(
            [x], [ineq({x: F(1, 3)}, g.LE, F(7, 2)), ineq({x: -1}, g.LT, 0)]
        )
        data = g.polyhedron_to_json(p)
        back = g.polyhedron_from_json(data, [x])
        assert back == p

    def test_empty_serializes(self):
        x = g.param("x")
        data = g.polyhedron_to_json(g.Polyhedron.empty([x]))
        assert g.polyhedron_from_json(data, [x]).is_empty()


class TestVarIntervalAndSampling:
    def test_interval_with_strict_bound(self):
        x = g.param("x")
        p = g.Polyhedron([x], [ineq({x: -1}, g.LT, -2), ineq({x: 1}, g.LE, 5)])
        lo, lo_att, hi, hi_att = g.var_interval(p, x)
        assert (lo, lo_att, hi, hi_att) == (F(2), False, F(5), True)

    def test_unbounded_side(self):
        x = g.param("x")
        p = g.Polyhedron([x], [ineq({x: -1}, g.LE, -3)])
        lo, _, hi, _ = g.var_interval(p, x)
        assert lo == F(3) and hi is None

    def test_sampling_lands_inside(self):
        x, y = g.param("x"), g.param("y")
        rng = random.Random(11)
        p = g.Polyhedron(
            [x, y],
            box(x, 0, 4) + [ineq({y: 1, x: -2}, g.EQ, 0)],
        )
        for _ in range(25):
            pt = g.sample_point(p, rng)
            assert p.contains_point(pt)
            assert pt[y] == 2 * pt[x]

    def test_sampling_open_region(self):
        x = g.param("x")
        p = g.Polyhedron([x], [ineq({x: -1}, g.LT, 0), ineq({x: 1}, g.LT, 1)])
        rng = random.Random(3)
        for _ in range(10):
            pt = g.sample_point(p, rng)
            assert F(0) < pt[x] < F(1)


class TestMeetAlgebra:
    def test_commutative_associative_sampled(self):
        rng = random.Random(23)
        x, y, z = g.param("x"), g.param("y"), g.param("z")
        universe = [x, y, z]
        for _ in range(30):
            polys = []
            for _k in range(3):
                rows = []
                for _r in range(3):
                    coeffs = {
                        v: F(rng.randint(-2, 2)) for v in universe if rng.random() < 0.7
                    }
                    rows.append(
                        g.make_inequality(coeffs, g.LE, F(rng.randint(-2, 6)))
                    )
                polys.append(g.Polyhedron(universe, rows))
            a, b, c = polys
            ab_c = g.meet(g.meet(a, b), c)
            a_bc = g.meet(a, g.meet(b, c))
            ba = g.meet(b, a)
            for _s in range(40):
                pt = {v: F(rng.randint(-4, 8), rng.randint(1, 3)) for v in universe}
                lhs = ab_c.contains_point(pt)
                assert lhs == a_bc.contains_point(pt)
                assert g.meet(a, b).contains_point(pt) == ba.contains_point(pt)
