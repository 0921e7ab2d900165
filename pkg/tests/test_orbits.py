import math

import numpy as np
import pytest

from henonlike.map_core import MapParams, Nonlinearity, State, evaluate_f
from henonlike.orbits import (
    CLOSURE_TOL,
    ContinuationError,
    PeriodicOrbit,
    continue_in_b,
    find_1d_orbits,
    find_orbit,
    fixed_point_2d,
    multiplier_track,
    newton_cycle,
    structural_stability,
)
from henonlike.spectrum import char_poly_closed_form, cycle_residual, eigenvalues

Q = Nonlinearity.quadratic


def orbit_xs(orbits, period):
    return [tuple(o.xs) for o in orbits if o.period == period]


class TestFind:
    def test_quadratic_fixed_points(self):
        orbits = find_1d_orbits(Q(0.9), 1)
        xs = sorted(o.xs[0] for o in orbits)
        r = math.sqrt(1 + 4 * 0.9)
        np.testing.assert_allclose(xs, [(-1 - r) / 2, (-1 + r) / 2], rtol=1e-14)
        assert xs[1] == pytest.approx(0.5724, abs=1e-4)
        assert xs[0] == pytest.approx(-1.5724, abs=1e-4)

    def test_period_two_at_mu_one(self):
        # 1 - x^2 sends 0 -> 1 -> 0; the cycle solves x^2 - x + (1 - mu) = 0
        two = [o for o in find_1d_orbits(Q(1.0), 2) if o.period == 2]
        assert len(two) == 1
        np.testing.assert_allclose(two[0].xs, [0.0, 1.0], atol=1e-14)
        assert two[0].m_x == 0.0
        assert not structural_stability(two[0])

    def test_cubic_fixed_points(self):
        xs = sorted(o.xs[0] for o in find_1d_orbits(Nonlinearity.cubic(2.0), 1))
        np.testing.assert_allclose(xs, [-math.sqrt(3), 0.0, math.sqrt(3)], atol=1e-14)

    def test_no_period_two_below_flip(self):
        assert orbit_xs(find_1d_orbits(Q(0.7), 2), 2) == []

    @pytest.mark.parametrize("mu", [0.9, 1.2, 1.4, 1.9])
    def test_closure_and_divisors(self, mu):
        f = Q(mu)
        for o in find_1d_orbits(f, 6, n=2):
            assert o.residual < CLOSURE_TOL
            assert o.points[0].x == min(o.xs)
            x = o.xs[0]
            for d in range(1, o.period):
                if o.period % d == 0:
                    y = x
                    for _ in range(d):
                        y = evaluate_f(f, y)
                    assert abs(y - x) > 1e-9

    def test_counts_at_full_chaos(self):
        # mu = 2 is conjugate to the full tent map: 2^p - ... points of period p
        orbits = find_1d_orbits(Q(2.0), 4)
        counts = [len(orbit_xs(orbits, p)) for p in (1, 2, 3, 4)]
        assert counts == [2, 1, 2, 3]

    def test_period_limit(self):
        with pytest.raises(ValueError):
            find_1d_orbits(Q(1.0), 13)

    def test_embedding_dimension(self):
        o = find_1d_orbits(Q(0.9), 1, n=3)[0]
        assert o.points[0].n == 3 and o.multipliers.size == 4


class TestStability:
    def test_hyperbolic_fixed_point(self):
        o = find_orbit(find_1d_orbits(Q(0.9), 1), 1, near=0.57)
        assert o.m_x == pytest.approx(-1.1448, abs=1e-4)
        assert structural_stability(o)

    def test_superstable(self):
        o = find_orbit(find_1d_orbits(Q(1.0), 2), 2)
        assert not structural_stability(o)

    def test_flip_point(self):
        # at mu = 3/4 the fixed point has multiplier -1
        x = 0.5
        o = PeriodicOrbit(1, (State(x, [0.0]),), 0.0, np.array([-1.0, 0.0]), 0.0, -2 * x)
        assert not structural_stability(o)

    def test_needs_uncoupled(self):
        o = PeriodicOrbit(1, (State(0.5, [0.0]),), 0.1, np.array([-1.0, 0.0]), 0.0, -1.0)
        with pytest.raises(ValueError):
            structural_stability(o)


class TestContinuation:
    def test_planar_fixed_point_closed_form(self):
        p0 = MapParams(Q(0.9), 0.0)
        o = find_orbit(find_1d_orbits(Q(0.9), 1), 1, near=0.57)
        hist = continue_in_b(p0, o, 0.3, steps=10)
        end = hist[-1]
        x_ref = ((0.3 - 1) + math.sqrt(0.7 ** 2 + 3.6)) / 2
        assert x_ref == pytest.approx(fixed_point_2d(0.9, 0.3)[0])
        assert end.b_value == 0.3
        assert end.points[0].x == pytest.approx(x_ref, abs=1e-9)
        assert end.points[0].y[0] == pytest.approx(0.3 * x_ref, abs=1e-9)
        assert len(hist) == 11 and hist[0] is o

    def test_small_coupling(self):
        p0 = MapParams(Q(0.9), 0.0)
        o = find_orbit(find_1d_orbits(Q(0.9), 1), 1, near=0.57)
        end = continue_in_b(p0, o, 1e-3, steps=4)[-1]
        assert abs(end.points[0].x - o.points[0].x) < 5e-3
        assert abs(abs(end.multipliers[0]) - abs(o.m_x)) < 5e-3
        assert abs(end.multipliers[1]) < 5e-3

    def test_zero_target(self):
        p0 = MapParams(Q(0.9), 0.0)
        o = find_1d_orbits(Q(0.9), 1)[0]
        assert continue_in_b(p0, o, 0.0) == [o]

    def test_requires_stability(self):
        p0 = MapParams(Q(1.0), 0.0)
        o = find_orbit(find_1d_orbits(Q(1.0), 2), 2)
        with pytest.raises(ValueError):
            continue_in_b(p0, o, 0.1)

    def test_requires_uncoupled_start(self):
        o = find_1d_orbits(Q(0.9), 1)[0]
        with pytest.raises(ValueError):
            continue_in_b(MapParams(Q(0.9), 0.1), o, 0.2)

    def test_unit_circle_collision(self):
        # the attracting 2-cycle flips where 4 mu = 5 b^2 - 6 b + 5
        p0 = MapParams(Q(1.2), 0.0)
        o = find_orbit(find_1d_orbits(Q(1.2), 2), 2)
        with pytest.raises(ContinuationError, match="unit circle") as e:
            continue_in_b(p0, o, 0.3, steps=300)
        b_flip = (6 - math.sqrt(36 - 20 * (5 - 4 * 1.2))) / 10
        assert e.value.history[-1].b_value == pytest.approx(b_flip, abs=1e-3)
        assert abs(e.value.history[-2].multipliers[0]) < 1 < abs(e.value.history[-1].multipliers[0])

    def test_higher_dimension(self):
        p0 = MapParams(Q(1.4), 0.0, (0.5, -0.3))
        o = find_orbit(find_1d_orbits(Q(1.4), 2, n=3), 2)
        hist = continue_in_b(p0, o, 0.05, steps=5)
        for orbit in hist[1:]:
            p = p0.replace(b=orbit.b_value)
            assert cycle_residual(p, orbit.points) < CLOSURE_TOL

    def test_multipliers_match_char_poly_for_fixed_points(self):
        p0 = MapParams(Q(0.9), 0.0, (0.4,))
        o = find_orbit(find_1d_orbits(Q(0.9), 1, n=2), 1, near=0.57)
        end = continue_in_b(p0, o, 0.2, steps=5)[-1]
        p = p0.replace(b=0.2)
        fp = -2 * end.points[0].x
        ref = eigenvalues(char_poly_closed_form(p, fp))
        np.testing.assert_allclose(np.sort_complex(end.multipliers), np.sort_complex(ref), atol=1e-8)

    def test_newton_divergence(self):
        p = MapParams(Q(0.9), 0.3)
        with pytest.raises(ArithmeticError):
            newton_cycle(p, np.array([[1e200, 0.0]]), max_iter=3)


class TestTrack:
    def test_rows_and_continuity(self):
        p0 = MapParams(Q(1.4), 0.0)
        o = find_orbit(find_1d_orbits(Q(1.4), 2), 2)
        hist = continue_in_b(p0, o, 0.05, steps=10)
        t = multiplier_track(hist)
        assert t.moduli.shape == (11, 2)
        assert t.moduli[0, 0] == pytest.approx(abs(o.m_x)) and t.moduli[0, 1] == 0.0
        assert t.is_continuous()
        assert np.isfinite(t.lipschitz_estimate())

    def test_single_entry(self):
        o = find_1d_orbits(Q(0.9), 1)[0]
        t = multiplier_track([o])
        assert t.moduli.shape == (1, 2) and t.jumps().size == 0 and t.is_continuous()


def test_find_orbit_lookup():
    orbits = find_1d_orbits(Q(0.9), 2)
    with pytest.raises(LookupError):
        find_orbit(orbits, 3)
