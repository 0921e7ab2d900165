"""Trapping domains and attractor certificates.

A domain ``D_alpha = (alpha_minus, alpha_plus) x {||y||_1 < gamma}`` is
certified when the map sends it into itself. Certificates come in two
flavours: closed-form ones for the quadratic and cubic families, and a
general test on the extreme values of ``f``. Every certificate can be
checked against sampling oracles that only use :func:`map_core.step`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.stats import qmc

from . import _kernels
from .map_core import (
    CUBIC,
    QUADRATIC,
    MapParams,
    Nonlinearity,
    evaluate_f,
    step_array,
)

EPS_CERT = 1e-12
BOUNDARY_SHRINK = 1e-9
CLOSED_ROUNDING_ULPS = 8


class CertifiedBy(str, Enum):
    THEOREM2 = "Theorem2"
    THEOREM3 = "Theorem3"
    THEOREM1_GENERAL = "Theorem1General"
    ORACLE_ONLY = "OracleOnly"


@dataclass(frozen=True)
class TrappingDomain:
    """Box ``(alpha_minus, alpha_plus) x {||y||_1 < gamma}``.

    With ``gamma == 0`` the y-part degenerates to ``{0}`` and membership is
    tested on the closed box instead.
    """

    alpha_minus: float
    alpha_plus: float
    gamma: float
    certified_by: CertifiedBy = CertifiedBy.ORACLE_ONLY
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.alpha_minus < self.alpha_plus:
            raise ValueError("alpha_minus must be smaller than alpha_plus")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")

    @property
    def alpha(self) -> float:
        return max(abs(self.alpha_minus), abs(self.alpha_plus))

    @property
    def strict(self) -> bool:
        return self.gamma > 0

    def contains(self, X) -> np.ndarray:
        """Membership mask for the rows of an ``(m, n + 1)`` array."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        x = X[:, 0]
        ny = np.abs(X[:, 1:]).sum(axis=1)
        if self.strict:
            return (self.alpha_minus < x) & (x < self.alpha_plus) & (ny < self.gamma)
        return (self.alpha_minus <= x) & (x <= self.alpha_plus) & (ny <= self.gamma)

    def to_dict(self) -> dict:
        out = {
            "alpha_minus": self.alpha_minus,
            "alpha_plus": self.alpha_plus,
            "gamma": self.gamma,
            "certified_by": self.certified_by.value,
        }
        if self.details:
            out["details"] = dict(self.details)
        return out


@dataclass(frozen=True)
class AuxMaps:
    """The two scalar maps ``f(x) + gamma`` and ``f(x) - gamma`` that
    sandwich the x-coordinate of the image."""

    f: Nonlinearity
    gamma: float

    def plus(self, x):
        return evaluate_f(self.f, x) + self.gamma

    def minus(self, x):
        return evaluate_f(self.f, x) - self.gamma


@dataclass(frozen=True)
class ExtremeValues:
    x_inf: float
    x_sup: float
    argmin: float
    argmax: float
    interval: tuple


@dataclass
class CheckReport:
    """Outcome of a sampling check; failures are data, not exceptions."""

    name: str
    passed: bool
    samples: int
    worst_margin: float
    failures: int = 0
    counterexample: Optional[dict] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _tol(eps, *vals) -> float:
    return eps * max(1.0, *(abs(v) for v in vals))


def gamma_bound(p: MapParams, alpha: float) -> float:
    """Radius of the l1-ball that the y-part never leaves while
    ``|x| < alpha``: ``alpha |b| / (1 - a_bound)``."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return alpha * abs(p.b) / (1.0 - p.a_bound)


def sample_box(p: MapParams, d: TrappingDomain, samples: int, rng,
               y_radius: Optional[float] = None) -> np.ndarray:
    """Uniform samples from ``D_alpha``; ``y_radius`` overrides ``gamma``."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(rng)
    r = d.gamma if y_radius is None else y_radius
    X = np.empty((samples, p.n + 1))
    X[:, 0] = rng.uniform(d.alpha_minus, d.alpha_plus, samples)
    # first n Dirichlet(1, ..., 1) coordinates are uniform on the simplex
    w = rng.dirichlet(np.ones(p.n + 1), samples)[:, : p.n]
    signs = rng.choice([-1.0, 1.0], size=(samples, p.n))
    X[:, 1:] = r * w * signs
    return X


def lemma1_check(p: MapParams, d: TrappingDomain, samples: int = 10_000,
                 rng_seed=0, y_radius: Optional[float] = None) -> CheckReport:
    """Sample ``D_alpha`` and check that every image keeps ``||y||_1 < gamma``."""
    X = sample_box(p, d, samples, rng_seed, y_radius)
    Y = step_array(p, X)
    ny = np.abs(Y[:, 1:]).sum(axis=1)
    margin = d.gamma - ny
    bad = margin <= 0 if d.strict else margin < 0
    report = CheckReport("lemma1", not bad.any(), samples, float(margin.min()), int(bad.sum()))
    if bad.any():
        i = int(np.argmin(margin))
        report.counterexample = {"state": X[i].tolist(), "image": Y[i].tolist()}
    return report


def sandwich_check(p: MapParams, d: TrappingDomain, samples: int = 10_000,
                   rng_seed=0, y_radius: Optional[float] = None) -> CheckReport:
    """Check ``f(x) - gamma < x' < f(x) + gamma`` and ``||y'|| < gamma`` on
    samples of ``D_alpha``.

    The weaker bound ``|x' - f(x)| <= ||y||`` is reported in ``extra``.
    """
    X = sample_box(p, d, samples, rng_seed, y_radius)
    Y = step_array(p, X)
    fx = evaluate_f(p.f, X[:, 0])
    aux = AuxMaps(p.f, d.gamma)
    lo = Y[:, 0] - aux.minus(X[:, 0])
    hi = aux.plus(X[:, 0]) - Y[:, 0]
    ym = d.gamma - np.abs(Y[:, 1:]).sum(axis=1)
    margin = np.minimum(np.minimum(lo, hi), ym)
    bad = margin <= 0 if d.strict else margin < 0
    ny = np.abs(X[:, 1:]).sum(axis=1)
    slack = 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(Y[:, 0]))
    corollary1 = bool(np.all(np.abs(Y[:, 0] - fx) <= ny + slack))
    report = CheckReport("sandwich", not bad.any(), samples, float(margin.min()),
                         int(bad.sum()), extra={"norm_bound_ok": corollary1})
    if bad.any():
        i = int(np.argmin(margin))
        report.counterexample = {"state": X[i].tolist(), "image": Y[i].tolist()}
    return report


def extreme_values(f: Nonlinearity, interval) -> ExtremeValues:
    """Exact inf/sup of ``f`` over a closed interval (critical points plus
    endpoints)."""
    lo, hi = float(interval[0]), float(interval[1])
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise ValueError("need a finite interval with lo <= hi")
    crit = f.critical_points()
    cand = np.concatenate(([lo, hi], crit[(crit > lo) & (crit < hi)]))
    vals = np.asarray(evaluate_f(f, cand), dtype=float)
    i, j = int(np.argmin(vals)), int(np.argmax(vals))
    return ExtremeValues(float(vals[i]), float(vals[j]), float(cand[i]), float(cand[j]), (lo, hi))


def theorem1_certify(f: Nonlinearity, alpha_minus: float, alpha_plus: float,
                     gamma: float, eps: float = EPS_CERT) -> bool:
    """True iff ``alpha_minus + gamma <= inf f`` and ``sup f <= alpha_plus - gamma``
    over the interval."""
    if not alpha_minus < alpha_plus:
        raise ValueError("alpha_minus must be smaller than alpha_plus")
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    ev = extreme_values(f, (alpha_minus, alpha_plus))
    lower = alpha_minus + gamma
    upper = alpha_plus - gamma
    return (lower <= ev.x_inf + _tol(eps, lower, ev.x_inf)
            and ev.x_sup <= upper + _tol(eps, upper, ev.x_sup))


def theorem1_domain(p: MapParams, alpha_minus: float, alpha_plus: float,
                    eps: float = EPS_CERT) -> Optional[TrappingDomain]:
    """General certificate for an arbitrary polynomial ``f`` on a chosen
    interval, with ``gamma`` taken from :func:`gamma_bound`."""
    alpha = max(abs(alpha_minus), abs(alpha_plus))
    gamma = gamma_bound(p, alpha)
    if not theorem1_certify(p.f, alpha_minus, alpha_plus, gamma, eps):
        return None
    return TrappingDomain(alpha_minus, alpha_plus, gamma, CertifiedBy.THEOREM1_GENERAL)


def lemma2_certify(f: Nonlinearity, invariant_interval, gamma: float,
                   eps: float = EPS_CERT) -> Optional[TrappingDomain]:
    """Certify ``D_alpha`` on an interval invariant under ``f`` alone.

    Raises ``ValueError`` if ``f`` does not map the interval into itself.
    """
    a0m, a0p = float(invariant_interval[0]), float(invariant_interval[1])
    ev = extreme_values(f, (a0m, a0p))
    if ev.x_inf < a0m - _tol(eps, a0m) or ev.x_sup > a0p + _tol(eps, a0p):
        raise ValueError("interval not invariant")
    lo, hi = ev.x_inf - gamma, ev.x_sup + gamma
    if lo > a0m - _tol(eps, lo, a0m) and hi < a0p + _tol(eps, hi, a0p):
        return TrappingDomain(a0m, a0p, gamma, CertifiedBy.THEOREM1_GENERAL,
                              {"x_inf": ev.x_inf, "x_sup": ev.x_sup})
    return None


def _coupling_slack(b: float, a_bound: float) -> float:
    s = 1.0 - a_bound - abs(b)
    if s <= 0:
        raise ValueError("coupling too strong: 1 - a_bound - |b| <= 0")
    return s


def theorem2_bound(b: float, a_bound: float) -> float:
    """Largest ``mu`` for which the quadratic map has the closed-form domain."""
    return 2.0 * (1.0 - abs(b) / (1.0 - a_bound)) ** 2


def theorem2_domain(mu: float, b: float, a_bound: float = 0.0) -> Optional[TrappingDomain]:
    """Closed-form trapping domain for ``f(x) = mu - x**2``.

    Returns ``None`` outside ``0 < mu < 2 (1 - |b| / (1 - a_bound))**2``.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if not (abs(b) < 1 and 0 <= a_bound < 1):
        raise ValueError("need |b| < 1 and 0 <= a_bound < 1")
    s = _coupling_slack(b, a_bound)
    if not mu < theorem2_bound(b, a_bound):
        return None
    alpha = mu * (1.0 - a_bound) / s
    gamma = mu * abs(b) / s
    # the invariance chain behind the closed form
    aux = AuxMaps(Nonlinearity.quadratic(mu), gamma)
    a_plus = mu + gamma
    a_minus = float(aux.minus(a_plus))
    details = {
        "bound": theorem2_bound(b, a_bound),
        "invariance_gap": (mu + gamma) ** 2 - 2.0 * mu,
        "aux_alpha_plus": a_plus,
        "aux_alpha_minus": a_minus,
        "aux_fixed_points": quadratic_aux_fixed_points(mu, gamma),
    }
    return TrappingDomain(-alpha, alpha, gamma, CertifiedBy.THEOREM2, details)


def quadratic_aux_fixed_points(mu: float, gamma: float) -> tuple:
    """Fixed points ``(x_l, x_r)`` of ``x -> mu - x**2 - gamma``."""
    disc = 1.0 + 4.0 * (mu - gamma)
    if disc < 0:
        raise ValueError("no real fixed points (beyond the saddle-node of the lower map)")
    r = math.sqrt(disc)
    return (-1.0 - r) / 2.0, (-1.0 + r) / 2.0


def cubic_aux_fixed_points(mu: float, gamma: float, sign: int = 1) -> np.ndarray:
    """Real fixed points of ``x -> x**3 - mu x + sign * gamma``, ascending."""
    coeffs = [1.0, 0.0, -(mu + 1.0), sign * gamma]
    roots = np.roots(coeffs)
    real = roots[np.abs(roots.imag) < 1e-9].real
    # Newton polish against the cubic itself
    for _ in range(3):
        g = real ** 3 - (mu + 1.0) * real + sign * gamma
        dg = 3 * real ** 2 - (mu + 1.0)
        ok = dg != 0
        real[ok] -= g[ok] / dg[ok]
    return np.sort(real)


def theorem3_bound(mu: float, a_bound: float) -> float:
    """Largest ``|b|`` for the cubic closed-form domain."""
    return (1.0 - a_bound) * (3.0 - mu) / 3.0


def theorem3_domain(mu: float, b: float, a_bound: float = 0.0) -> Optional[TrappingDomain]:
    """Closed-form trapping domain for ``f(x) = x**3 - mu x``.

    Needs ``0 < mu < 3`` and ``|b| < (1 - a_bound)(3 - mu) / 3``.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if not (abs(b) < 1 and 0 <= a_bound < 1):
        raise ValueError("need |b| < 1 and 0 <= a_bound < 1")
    s = _coupling_slack(b, a_bound)
    if not (mu < 3.0 and abs(b) < theorem3_bound(mu, a_bound)):
        return None
    xi = math.sqrt(mu / 3.0)
    beta = abs(b) / s
    scale = 2.0 * xi * mu / 3.0
    gamma = scale * beta
    alpha = scale * (1.0 + beta)
    p = mu * (1.0 + beta)
    cubic_form = p ** 3 - 27.0 / 4.0 * p - 27.0 / 4.0
    factored = (p - 3.0) * (p + 1.5) ** 2
    if not (p < 3.0 and factored < 0):
        # only reachable through rounding at the very edge of the region
        return None
    details = {
        "bound": theorem3_bound(mu, a_bound),
        "xi": xi,
        "beta": beta,
        "p": p,
        "p_inequality": cubic_form,
        "p_factored": factored,
    }
    return TrappingDomain(-alpha, alpha, gamma, CertifiedBy.THEOREM3, details)


def theorem3_boundary_domain(mu: float) -> tuple:
    """``(alpha, gamma)`` at the edge ``|b| = (1 - a)(3 - mu)/3`` of the cubic
    region; depends on ``mu`` only."""
    if not 0 < mu < 3:
        raise ValueError("need 0 < mu < 3")
    r = math.sqrt(mu / 3.0)
    return 2.0 * r, 2.0 * (1.0 - mu / 3.0) * r


def cubic_saddle_node_curve(mu: float, a_bound: float = 0.0) -> float:
    """``|b|`` at which the cubic auxiliary maps lose their outer fixed points."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    s = (1.0 + mu) ** 1.5
    return (1.0 - a_bound) * s / (mu ** 1.5 + s)


def certified_domain(p: MapParams) -> Optional[TrappingDomain]:
    """The closed-form certificate matching ``p.f``, if any."""
    f = p.f.canonical()
    try:
        if f.kind == QUADRATIC and f.mu > 0:
            return theorem2_domain(f.mu, p.b, p.a_bound)
        if f.kind == CUBIC and f.mu > 0:
            return theorem3_domain(f.mu, p.b, p.a_bound)
    except ValueError:
        return None
    return None


def oracle_seeds(p: MapParams, d: TrappingDomain, grid_density: int) -> np.ndarray:
    """Deterministic seed grid over ``D_alpha``, heavy on the boundary.

    ``grid_density`` x-values times ``grid_density`` y-values. The y-values lie
    mostly on the l1-sphere of radius ``gamma (1 - 1e-9)``, the rest on
    interior rays. With ``gamma == 0`` all seeds sit on ``y = 0``.
    """
    if grid_density < 2:
        raise ValueError("grid_density must be >= 2")
    n = p.n
    mid = 0.5 * (d.alpha_minus + d.alpha_plus)
    half = 0.5 * (d.alpha_plus - d.alpha_minus) * (1.0 - BOUNDARY_SHRINK)
    if d.gamma == 0:
        xs = mid + half * np.linspace(-1.0, 1.0, grid_density * grid_density)
        X = np.zeros((xs.size, n + 1))
        X[:, 0] = xs
        return X
    xs = mid + half * np.linspace(-1.0, 1.0, grid_density)
    r = d.gamma * (1.0 - BOUNDARY_SHRINK)
    if n == 1:
        ys = r * np.linspace(-1.0, 1.0, grid_density)[:, None]
    else:
        ys = _l1_directions(n, grid_density)
        n_sphere = max(2 * n, (3 * grid_density) // 4)
        frac = np.ones(grid_density)
        frac[n_sphere:] = np.linspace(0.0, 1.0, grid_density - n_sphere, endpoint=False)
        ys = r * ys * frac[:, None]
    X = np.empty((grid_density * ys.shape[0], n + 1))
    X[:, 0] = np.repeat(xs, ys.shape[0])
    X[:, 1:] = np.tile(ys, (grid_density, 1))
    return X


def _l1_directions(n: int, count: int) -> np.ndarray:
    """``count`` deterministic points of the unit l1-sphere in R^n, starting
    with its ``2n`` vertices."""
    out = np.zeros((count, n))
    k = 0
    for i in range(n):
        for sgn in (1.0, -1.0):
            if k < count:
                out[k, i] = sgn
                k += 1
    rest = count - k
    if rest > 0:
        u = qmc.Halton(d=n - 1, scramble=False).random(rest + 1)[1:]
        cuts = np.sort(u, axis=1)
        w = np.diff(np.hstack([np.zeros((rest, 1)), cuts, np.ones((rest, 1))]), axis=1)
        idx = np.arange(rest)[:, None]
        signs = np.where((idx >> np.arange(n)) & 1, -1.0, 1.0)
        out[k:] = w * signs
    return out


@dataclass
class OracleReport:
    passed: bool
    seeds: int
    iterations: int
    left_d: int
    left_domain: int
    x_margin: float
    y_margin: float
    counterexample: Optional[dict] = None

    def to_dict(self) -> dict:
        return asdict(self)


def brute_force_trap_oracle(p: MapParams, d: TrappingDomain, grid_density: int = 100,
                            iterations: int = 1000, workers: int = 1) -> OracleReport:
    """Iterate a seed grid covering ``D_alpha`` and record every excursion.

    Passes when no orbit leaves ``R x D_y`` and no orbit leaves ``D_alpha``
    at any step ``1 .. iterations``. Seeds are split into ``workers`` chunks
    that run concurrently; the result does not depend on ``workers``.
    """
    X0 = oracle_seeds(p, d, grid_density)
    kind, mu, coeffs = _kernels.nonlinearity_args(p.f)
    a = np.asarray(p.a, dtype=np.float64)
    args = (kind, mu, coeffs, p.b, a, int(iterations), d.alpha_minus, d.alpha_plus, d.gamma)
    chunks = np.array_split(X0, max(1, workers))
    if len(chunks) > 1:
        with ThreadPoolExecutor(len(chunks)) as ex:
            parts = list(ex.map(lambda c: _kernels.trap_margins(c, *args), chunks))
    else:
        parts = [_kernels.trap_margins(X0, *args)]
    xm = np.concatenate([r[0] for r in parts])
    ym = np.concatenate([r[1] for r in parts])
    # NaN can only follow an overflow, which is an excursion in any case
    xm[np.isnan(xm)] = -np.inf
    ym[np.isnan(ym)] = -np.inf
    if d.strict:
        out_d = ym <= 0
        out_box = out_d | (xm <= 0)
    else:
        # a closed domain can be touched exactly (a critical value on the
        # edge), so allow the last few bits of rounding there
        slack = CLOSED_ROUNDING_ULPS * np.finfo(float).eps
        out_d = ym < -slack * max(d.gamma, 1.0)
        out_box = out_d | (xm < -slack * d.alpha)
    counterexample = None
    if out_box.any():
        i = int(np.argmax(out_box))
        counterexample = {"seed": X0[i].tolist(), "step": _first_exit(p, d, X0[i], iterations)}
    return OracleReport(not out_box.any(), X0.shape[0], int(iterations), int(out_d.sum()),
                        int(out_box.sum()), float(xm.min()), float(ym.min()), counterexample)


def _first_exit(p: MapParams, d: TrappingDomain, seed: np.ndarray, iterations: int) -> int:
    X = seed[None, :].copy()
    for t in range(1, iterations + 1):
        X = step_array(p, X)
        if not d.contains(X)[0]:
            return t
    return -1
