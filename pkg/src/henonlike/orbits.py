"""Periodic orbits: search in the reduced 1-D map and continuation in ``b``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .map_core import (
    CUBIC,
    QUADRATIC,
    MapParams,
    Nonlinearity,
    State,
    evaluate_f,
    jacobian_at,
    step_array,
)
from .spectrum import cycle_residual, orbit_multipliers

STABILITY_DELTA = 1e-6
CLOSURE_TOL = 1e-10
MAX_PERIOD = 12


@dataclass(frozen=True)
class PeriodicOrbit:
    period: int
    points: tuple
    b_value: float
    multipliers: np.ndarray
    residual: float
    m_x: float
    tangent: bool = False

    @property
    def xs(self) -> np.ndarray:
        return np.array([s.x for s in self.points])

    def as_array(self) -> np.ndarray:
        return np.vstack([s.as_array() for s in self.points])


class ContinuationError(RuntimeError):
    """Continuation stopped early; ``history`` holds the accepted orbits."""

    def __init__(self, message: str, history: list):
        super().__init__(message)
        self.history = history


def orbit_bound(f: Nonlinearity) -> float:
    """Radius outside which ``|f(x)| > |x|``, so no periodic point lives there."""
    if f.kind == QUADRATIC:
        return (1.0 + math.sqrt(1.0 + 4.0 * abs(f.mu))) / 2.0
    if f.kind == CUBIC:
        return max(1.0, math.sqrt(1.0 + abs(f.mu)))
    c = np.asarray(f.coefficients)
    if c.size < 3:
        raise ValueError("need an explicit interval for polynomials of degree < 2")
    return max(1.0, (1.0 + np.sum(np.abs(c[:-1]))) / abs(c[-1]))


def _iterate_f(f: Nonlinearity, x, k: int):
    for _ in range(k):
        x = evaluate_f(f, x)
    return x


def _divisors(p: int) -> list:
    return [d for d in range(1, p) if p % d == 0]


def _roots_of_return_map(f: Nonlinearity, p: int, lo: float, hi: float, per_period: int):
    """Roots of ``f^p(x) - x`` on ``[lo, hi]``: sign changes on a uniform grid
    refined by Brent's method, plus touching zeros found by local minimisation
    of ``|f^p(x) - x|`` (flagged as tangent)."""
    grid = np.linspace(lo, hi, per_period * p + 1)
    with np.errstate(over="ignore", invalid="ignore"):
        g = _iterate_f(f, grid, p) - grid
    g = np.nan_to_num(g, nan=np.inf)

    def G(x):
        return _iterate_f(f, x, p) - x

    roots = []
    sgn = np.sign(g)
    exact = np.flatnonzero(g == 0)
    roots.extend((float(grid[i]), False) for i in exact)
    change = np.flatnonzero(sgn[:-1] * sgn[1:] < 0)
    for i in change:
        roots.append((brentq(G, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps), False))
    ag = np.abs(g)
    interior = np.arange(1, grid.size - 1)
    local_min = interior[(ag[interior] <= ag[interior - 1]) & (ag[interior] <= ag[interior + 1])
                         & (sgn[interior - 1] == sgn[interior + 1]) & (ag[interior] > 0)]
    for i in local_min:
        res = minimize_scalar(lambda x: abs(G(x)), bounds=(grid[i - 1], grid[i + 1]),
                              method="bounded", options={"xatol": 1e-14})
        if res.fun < 1e-9:
            roots.append((float(res.x), True))
    return roots


def find_1d_orbits(f: Nonlinearity, period_max: int, interval=None, n: int = 1,
                   per_period: int = 10_000) -> list:
    """All periodic orbits of ``x -> f(x)`` with period ``1 .. period_max``,
    embedded as ``b = 0`` orbits of the ``(n + 1)``-dimensional map.

    Orbits are returned once each (cyclic shifts removed), starting at their
    smallest point, ordered by period and then position. Orbits whose
    least period is a proper divisor of ``p`` are not repeated at ``p``.
    """
    if not 1 <= period_max <= MAX_PERIOD:
        raise ValueError(f"period_max must be in 1..{MAX_PERIOD}")
    if interval is None:
        # padded: the bound itself can be a periodic point
        r = orbit_bound(f) * (1.0 + 1e-3)
        interval = (-r, r)
    lo, hi = float(interval[0]), float(interval[1])
    p0 = MapParams(f, 0.0, (0.0,) * (n - 1))
    found = []
    for p in range(1, period_max + 1):
        same_period = []
        for r, tangent in sorted(_roots_of_return_map(f, p, lo, hi, per_period)):
            if any(abs(_iterate_f(f, r, d) - r) < 1e-9 * max(1.0, abs(r)) for d in _divisors(p)):
                continue
            if any(np.min(np.abs(o.xs - r)) < 1e-8 * max(1.0, abs(r)) for o in same_period):
                continue
            xs = [r]
            for _ in range(p - 1):
                xs.append(float(evaluate_f(f, xs[-1])))
            k = int(np.argmin(xs))
            xs = xs[k:] + xs[:k]
            Z = np.zeros((p, n + 1))
            Z[:, 0] = xs
            Z, _ = newton_cycle(p0, Z)
            same_period.append(_package(p0, Z, tangent))
        found.extend(sorted(same_period, key=lambda o: o.points[0].x))
    return found


def _package(p: MapParams, Z: np.ndarray, tangent: bool = False) -> PeriodicOrbit:
    pts = tuple(State.from_array(z) for z in Z)
    spec = orbit_multipliers(p, pts)
    return PeriodicOrbit(len(pts), pts, p.b, spec.multipliers, cycle_residual(p, pts),
                         spec.m_x, tangent)


def structural_stability(o: PeriodicOrbit, delta: float = STABILITY_DELTA) -> bool:
    """``m_x`` is neither (near) zero nor on the unit circle."""
    if o.b_value != 0.0:
        raise ValueError("structural stability is judged on b = 0 orbits")
    if o.tangent:
        return False
    m = abs(o.m_x)
    return m > delta and abs(m - 1.0) > delta


def _cycle_system(p: MapParams, Z: np.ndarray):
    """Residual ``G_i = T(z_i) - z_(i+1)`` and its dense Jacobian."""
    k, d = Z.shape
    G = step_array(p, Z) - np.roll(Z, -1, axis=0)
    DG = np.zeros((k * d, k * d))
    eye = np.eye(d)
    for i in range(k):
        j = (i + 1) % k
        DG[i * d:(i + 1) * d, i * d:(i + 1) * d] += jacobian_at(p, Z[i, 0])
        DG[i * d:(i + 1) * d, j * d:(j + 1) * d] -= eye
    return G, DG


def newton_cycle(p: MapParams, Z: np.ndarray, tol: float = CLOSURE_TOL, max_iter: int = 50):
    """Solve the cycle system for all ``p`` points at once.

    Returns ``(Z, iterations)``; raises ``ArithmeticError`` when the residual
    does not drop below ``tol``.
    """
    Z = np.array(Z, dtype=float)
    for it in range(1, max_iter + 1):
        G, DG = _cycle_system(p, Z)
        if not np.all(np.isfinite(G)):
            break
        try:
            dz = np.linalg.solve(DG, -G.reshape(-1))
        except np.linalg.LinAlgError:
            break
        Z = Z + dz.reshape(Z.shape)
        small = np.max(np.abs(dz)) <= 1e-15 * (1.0 + np.max(np.abs(Z)))
        if small or np.max(np.abs(G)) < 1e-15:
            break
    res = float(np.max(np.abs(step_array(p, Z) - np.roll(Z, -1, axis=0))))
    if not res < tol:
        raise ArithmeticError(f"Newton divergence (residual {res:.3e})")
    return Z, it


def _outside_count(o: PeriodicOrbit) -> int:
    return int(np.sum(np.abs(o.multipliers) > 1.0))


def continue_in_b(p0: MapParams, o: PeriodicOrbit, b_target: float, steps: int = 10,
                  min_db: float = 1e-6, max_iter: int = 50,
                  delta: float = STABILITY_DELTA) -> list:
    """Follow a structurally stable ``b = 0`` orbit to ``b = b_target``.

    ``b`` moves along ``steps`` equal increments; each increment may be
    halved down to ``min_db`` when Newton fails. The returned history starts
    with ``o`` and has one orbit per increment.
    """
    if p0.b != 0.0:
        raise ValueError("continuation starts from b = 0")
    if not abs(b_target) < 1:
        raise ValueError("|b_target| must be < 1")
    if not structural_stability(o, delta):
        raise ValueError("orbit is not structurally stable")
    if o.points[0].n != p0.n:
        raise ValueError("orbit dimension does not match the map")
    history = [o]
    if b_target == 0.0:
        return history
    Z = o.as_array()
    b = 0.0
    for k in range(1, steps + 1):
        b_next = b_target * k / steps
        db = b_next - b
        while b != b_next:
            trial = b_next if abs(b_next - b) <= abs(db) else b + db
            try:
                Z_new, _ = newton_cycle(p0.replace(b=trial), Z, max_iter=max_iter)
            except ArithmeticError:
                db /= 2.0
                if abs(db) < min_db:
                    raise ContinuationError(f"Newton divergence near b={trial:.6g}", history)
                continue
            Z, b = Z_new, trial
        orbit = _package(p0.replace(b=b), Z)
        # a multiplier can also jump across the circle between two steps
        crossed = _outside_count(orbit) != _outside_count(history[-1])
        history.append(orbit)
        if crossed or np.any(np.abs(np.abs(orbit.multipliers) - 1.0) <= delta):
            raise ContinuationError(f"multiplier collision with unit circle at b={b:.6g}", history)
    return history


@dataclass(frozen=True)
class MultiplierTrack:
    b: np.ndarray
    moduli: np.ndarray = field(repr=False)

    def jumps(self) -> np.ndarray:
        """Largest change in any sorted modulus between consecutive rows."""
        if len(self.b) < 2:
            return np.zeros(0)
        return np.max(np.abs(np.diff(self.moduli, axis=0)), axis=1)

    def lipschitz_estimate(self) -> float:
        j = self.jumps()
        if j.size == 0:
            return 0.0
        return float(np.max(j / np.abs(np.diff(self.b))))

    def is_continuous(self, factor: float = 10.0) -> bool:
        j = self.jumps()
        if j.size == 0:
            return True
        med = float(np.median(j))
        return bool(np.all(j <= factor * med)) if med > 0 else bool(np.all(j == 0))


def multiplier_track(history: Sequence[PeriodicOrbit]) -> MultiplierTrack:
    b = np.array([o.b_value for o in history])
    moduli = np.array([np.sort(np.abs(o.multipliers))[::-1] for o in history])
    return MultiplierTrack(b, moduli)


def fixed_point_2d(mu: float, b: float) -> tuple:
    """Fixed points ``x`` of the quadratic map with ``n = 1``:
    roots of ``x^2 + (1 - b) x - mu = 0``."""
    disc = (1.0 - b) ** 2 + 4.0 * mu
    if disc < 0:
        raise ValueError("no real fixed point")
    r = math.sqrt(disc)
    return ((b - 1.0) + r) / 2.0, ((b - 1.0) - r) / 2.0


def find_orbit(orbits: Sequence[PeriodicOrbit], period: int, near: Optional[float] = None) -> PeriodicOrbit:
    """Pick the orbit of a given period, the one passing closest to ``near``
    if several exist."""
    cands = [o for o in orbits if o.period == period]
    if not cands:
        raise LookupError(f"no orbit of period {period}")
    if near is None:
        return cands[0]
    return min(cands, key=lambda o: float(np.min(np.abs(o.xs - near))))
