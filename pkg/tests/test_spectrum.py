import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from henonlike.map_core import MapParams, Nonlinearity, State, jacobian_at
from henonlike.spectrum import (
    MAX_DETERMINANT_DIM,
    CharPoly,
    Construction,
    NotACycleError,
    char_poly_at,
    char_poly_closed_form,
    char_poly_determinant,
    companion,
    eigenvalues,
    monodromy,
    orbit_multipliers,
    root_conditions,
)

Q = Nonlinearity.quadratic


def params(b, a=(), mu=1.0):
    return MapParams(Q(mu), b, tuple(a))


@st.composite
def draws(draw):
    n = draw(st.integers(1, 10))
    b = draw(st.floats(-0.9, 0.9))
    a = draw(st.lists(st.floats(-0.9, 0.9), min_size=n - 1, max_size=n - 1))
    fp = draw(st.floats(-3, 3))
    return params(b, a), fp


class TestClosedForm:
    def test_planar(self):
        cp = char_poly_closed_form(params(0.3), 0.7)
        np.testing.assert_array_equal(cp.coeffs, [1.0, -0.7, -0.3])
        assert cp.degree == 2 and cp.built_from is Construction.CLOSED_FORM

    def test_uncoupled(self):
        cp = char_poly_closed_form(params(0.0, (0.5, 0.4)), 0.7)
        np.testing.assert_array_equal(cp.coeffs, [1.0, -0.7, 0, 0, 0])

    def test_three_by_three(self):
        cp = char_poly_closed_form(params(0.1, (0.5,)), 1.0)
        np.testing.assert_allclose(cp.coeffs, [1, -1, -0.1, -0.05], rtol=1e-15)
        J = np.array([[1, 1, 1], [0.1, 0, 0], [0, 0.5, 0]])
        s = 0.37
        assert cp(s) == pytest.approx(np.linalg.det(s * np.eye(3) - J), rel=1e-13)


class TestDeterminant:
    def test_planar_is_seed(self):
        p = params(0.3)
        np.testing.assert_array_equal(char_poly_determinant(p, 0.7).coeffs,
                                      char_poly_closed_form(p, 0.7).coeffs)

    def test_zero_shift(self):
        cp = char_poly_determinant(params(0.3, (0, 0, 0)), 0.7)
        np.testing.assert_allclose(cp.coeffs, [1, -0.7, -0.3, 0, 0, 0], atol=1e-15)

    def test_dimension_limit(self):
        p = MapParams.with_dimension(Q(1.0), 0.3, MAX_DETERMINANT_DIM, 0.5)
        with pytest.raises(ValueError):
            char_poly_determinant(p, 0.1)

    @given(draws())
    def test_agrees_with_closed_form(self, d):
        p, fp = d
        c1 = char_poly_closed_form(p, fp).coeffs
        c2 = char_poly_determinant(p, fp).coeffs
        assert c2.size == p.n + 2 and c2[0] == 1.0
        np.testing.assert_allclose(c2, c1, rtol=1e-10, atol=1e-10 * np.max(np.abs(c1)))

    @given(draws(), st.lists(st.floats(-2, 2), min_size=20, max_size=20))
    def test_evaluation_matches_numeric_det(self, d, ss):
        p, fp = d
        cp = char_poly_closed_form(p, fp)
        J = jacobian_at(p, 0.0)
        J[0, 0] = fp
        for s in ss:
            ref = (-1) ** (p.n + 1) * np.linalg.det(J - s * np.eye(p.dim))
            scale = np.polyval(np.abs(cp.coeffs), abs(s))
            assert abs(cp(s) - ref) <= 1e-9 * scale

    def test_char_poly_at(self):
        p = MapParams(Nonlinearity.cubic(2.0), 0.1, (0.5,))
        a = char_poly_at(p, 1.0)
        b = char_poly_at(p, 1.0, "Determinant")
        np.testing.assert_allclose(a.coeffs, b.coeffs)
        assert b.built_from is Construction.DETERMINANT


class TestEigenvalues:
    def test_uncoupled(self):
        r = eigenvalues(char_poly_closed_form(params(0.0, (0.5,)), 0.7))
        np.testing.assert_allclose(r, [0.7, 0, 0], atol=1e-15)

    def test_square_roots(self):
        r = eigenvalues(char_poly_closed_form(params(0.3), 0.0))
        np.testing.assert_allclose(sorted(r.real), [-math.sqrt(0.3), math.sqrt(0.3)], rtol=1e-14)

    def test_sorted_by_modulus(self, rng):
        cp = CharPoly(np.poly(rng.uniform(-2, 2, 6)), Construction.CLOSED_FORM)
        r = eigenvalues(cp)
        assert np.all(np.diff(np.abs(r)) <= 1e-12)

    @given(draws())
    def test_vieta(self, d):
        p, fp = d
        r = eigenvalues(char_poly_closed_form(p, fp))
        assert r.size == p.dim
        assert np.sum(r).real == pytest.approx(fp, abs=1e-9 * max(1, abs(fp)))
        det_j = (-1) ** p.n * p.b * np.prod(p.a)
        assert abs(np.prod(r) - det_j) <= 1e-10 + 1e-9 * abs(det_j)

    def test_vanishing_coupling(self):
        p0 = params(0.3, (0.6, -0.5, 0.4))
        prev = math.inf
        for b in np.logspace(-1, -8, 8):
            r = eigenvalues(char_poly_closed_form(p0.replace(b=b), 0.7))
            dist = max(abs(r[0] - 0.7), np.max(np.abs(r[1:])))
            assert dist < prev
            prev = dist

    def test_conditions(self):
        cp = char_poly_closed_form(params(0.3), 0.7)
        c = root_conditions(cp, eigenvalues(cp))
        assert np.all(np.isfinite(c)) and np.all(c > 0)
        double = CharPoly(np.array([1.0, -2.0, 1.0]), Construction.CLOSED_FORM)
        assert np.isinf(root_conditions(double, [1.0, 1.0])).all()

    def test_companion(self):
        C = companion([2.0, -2.0, -4.0])
        np.testing.assert_allclose(sorted(np.linalg.eigvals(C).real), [-1, 2])


class TestOrbitMultipliers:
    def test_uncoupled_fixed_point(self):
        x = (-1 + math.sqrt(4.6)) / 2
        p = MapParams(Q(0.9), 0.0, (0.5,))
        spec = orbit_multipliers(p, [State(x, [0.0, 0.0])])
        assert x == pytest.approx(0.5724, abs=1e-4)
        assert spec.m_x == pytest.approx(-2 * x, rel=1e-15)
        assert spec.m_x == pytest.approx(-1.1448, abs=1e-4)
        np.testing.assert_array_equal(spec.multipliers, [spec.m_x, 0, 0])

    def test_uncoupled_cycle_has_n_zeros(self):
        p = MapParams(Q(1.0), 0.0, (0.3, 0.2))
        spec = orbit_multipliers(p, [State(0.0, [0, 0, 0]), State(1.0, [0, 0, 0])])
        assert spec.m_x == 0.0
        assert np.count_nonzero(spec.multipliers) == 0 and spec.multipliers.size == 4

    def test_planar_fixed_point_roots(self):
        mu, b = 0.9, 0.3
        x = ((b - 1) + math.sqrt((1 - b) ** 2 + 4 * mu)) / 2
        p = MapParams(Q(mu), b)
        spec = orbit_multipliers(p, [State(x, [b * x])])
        ref = np.roots([1.0, 2 * x, -b])
        np.testing.assert_allclose(sorted(spec.multipliers.real), sorted(ref), rtol=1e-12)

    def test_not_a_cycle(self):
        with pytest.raises(NotACycleError):
            orbit_multipliers(params(0.3), [State(0.1, [0.0])])
        with pytest.raises(NotACycleError):
            orbit_multipliers(params(0.3), [])

    def test_monodromy_order(self):
        p = params(0.3, mu=1.4)
        pts = [State(0.2, [0.0]), State(-0.5, [0.1])]
        M = monodromy(p, pts)
        np.testing.assert_allclose(M, jacobian_at(p, -0.5) @ jacobian_at(p, 0.2))
