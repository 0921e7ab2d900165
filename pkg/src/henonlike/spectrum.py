"""Characteristic polynomial of the Jacobian and periodic-orbit multipliers.

Polynomials are stored monic with the highest power first (``numpy.roots``
order) as ``q(s) = (-1)**(n+1) det(J - s I) = det(s I - J)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .map_core import MapParams, State, derivative_f, jacobian_at, step

MAX_DETERMINANT_DIM = 64


class Construction(str, Enum):
    CLOSED_FORM = "ClosedForm"
    DETERMINANT = "Determinant"


@dataclass(frozen=True)
class CharPoly:
    coeffs: np.ndarray
    built_from: Construction

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, s):
        return np.polyval(self.coeffs, s)

    def to_dict(self) -> dict:
        return {"coeffs": [float(c) for c in self.coeffs], "built_from": self.built_from.value}


class NotACycleError(ValueError):
    pass


def char_poly_closed_form(p: MapParams, fx_prime: float) -> CharPoly:
    """``s^(n-1) (s^2 - f' s - b) - b (a_1 s^(n-2) + a_1 a_2 s^(n-3) + ... + a_1...a_(n-1))``."""
    n = p.n
    c = np.zeros(n + 2)
    c[0] = 1.0
    c[1] = -fx_prime
    c[2] = -p.b
    prod = 1.0
    for k in range(3, n + 2):
        prod *= p.a[k - 3]
        c[k] = -p.b * prod
    return CharPoly(c, Construction.CLOSED_FORM)


def char_poly_determinant(p: MapParams, fx_prime: float) -> CharPoly:
    """Expand ``det(J - s I)`` by cofactors along the last column.

    With ``D_m`` the determinant of the leading ``m x m`` block,
    ``D_(m+1) = (-1)^m b a_1 ... a_(m-1) - s D_m`` starting from
    ``D_2 = s^2 - f' s - b``. Coefficients are propagated exactly as
    polynomials, never by sampling ``s``.
    """
    if p.dim > MAX_DETERMINANT_DIM:
        raise ValueError(f"dimension {p.dim} exceeds {MAX_DETERMINANT_DIM}")
    s = Polynomial([0.0, 1.0])
    D = Polynomial([-p.b, -fx_prime, 1.0])
    prod = 1.0
    for m in range(2, p.n + 1):
        prod *= p.a[m - 2]
        D = (-1) ** m * p.b * prod - s * D
    q = (-1) ** (p.n + 1) * D
    coeffs = np.zeros(p.n + 2)
    coeffs[: q.coef.size] = q.coef
    return CharPoly(coeffs[::-1].copy(), Construction.DETERMINANT)


def char_poly_at(p: MapParams, x: float, construction=Construction.CLOSED_FORM) -> CharPoly:
    fp = float(derivative_f(p.f, x))
    if Construction(construction) is Construction.CLOSED_FORM:
        return char_poly_closed_form(p, fp)
    return char_poly_determinant(p, fp)


def companion(coeffs: Sequence[float]) -> np.ndarray:
    c = np.asarray(coeffs, dtype=complex if np.iscomplexobj(coeffs) else float)
    c = c / c[0]
    d = c.size - 1
    C = np.zeros((d, d), dtype=c.dtype)
    C[0, :] = -c[1:]
    C[np.arange(1, d), np.arange(d - 1)] = 1.0
    return C


def _sort_by_modulus(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    order = np.lexsort((-z.imag, -z.real, -np.abs(z)))
    return z[order]


def eigenvalues(cp: CharPoly) -> np.ndarray:
    """All roots of ``cp`` from the (LAPACK-balanced) companion matrix,
    sorted by modulus, largest first."""
    c = np.asarray(cp.coeffs, dtype=float)
    if c.size == 1:
        return np.array([], dtype=complex)
    roots = np.linalg.eigvals(companion(c)).astype(complex)
    dc = np.polyder(c)
    for i, r in enumerate(roots):
        # polish only when the eigensolve left a visible residual
        for _ in range(5):
            val = np.polyval(c, r)
            if abs(val) <= 1e-8:
                break
            d = np.polyval(dc, r)
            if d == 0:
                break
            r = r - val / d
        roots[i] = r
    return _sort_by_modulus(roots)


def root_conditions(cp: CharPoly, roots) -> np.ndarray:
    """Condition estimates ``sum |c_k| |r|^k / |q'(r)|``; ``inf`` marks
    (numerically) repeated roots."""
    c = np.asarray(cp.coeffs, dtype=float)
    dc = np.polyder(c)
    roots = np.asarray(roots, dtype=complex)
    num = np.polyval(np.abs(c), np.abs(roots))
    den = np.abs(np.polyval(dc, roots))
    with np.errstate(divide="ignore"):
        return np.where(den > 0, num / den, np.inf)


@dataclass(frozen=True)
class OrbitSpectrum:
    multipliers: np.ndarray
    m_x: float
    monodromy: np.ndarray


def cycle_residual(p: MapParams, orbit: Sequence[State]) -> float:
    """Largest sup-norm mismatch between ``T(points[i])`` and ``points[i+1]``."""
    k = len(orbit)
    worst = 0.0
    for i, s in enumerate(orbit):
        nxt = orbit[(i + 1) % k]
        worst = max(worst, float(np.max(np.abs(step(p, s).as_array() - nxt.as_array()))))
    return worst


def monodromy(p: MapParams, orbit: Sequence[State]) -> np.ndarray:
    """``J(x_p) ... J(x_1)`` along the orbit."""
    M = np.eye(p.dim)
    for s in orbit:
        M = jacobian_at(p, s.x) @ M
    return M


def orbit_multipliers(p: MapParams, orbit: Sequence[State], tol: float = 1e-8) -> OrbitSpectrum:
    """Multipliers of a periodic orbit, sorted by modulus.

    With ``b == 0`` the monodromy matrix is block triangular with a nilpotent
    y-block, so the spectrum is exactly ``{m_x, 0 (n times)}``; that structure
    is checked and returned instead of a numerically smeared eigensolve.
    """
    if not orbit:
        raise NotACycleError("empty orbit")
    res = cycle_residual(p, orbit)
    if not res < tol:
        raise NotACycleError(f"not a cycle: closure residual {res:.3e} >= {tol:.1e}")
    m_x = float(np.prod([derivative_f(p.f, s.x) for s in orbit]))
    M = monodromy(p, orbit)
    if p.b == 0.0:
        Yb = M[1:, 1:]
        if np.any(M[1:, 0] != 0.0) or np.any(np.linalg.matrix_power(Yb, p.n) != 0.0):
            raise AssertionError("b = 0 monodromy lost its block-triangular structure")
        mult = _sort_by_modulus(np.concatenate(([m_x], np.zeros(p.n))))
    else:
        mult = _sort_by_modulus(np.linalg.eigvals(M))
    return OrbitSpectrum(mult, m_x, M)
