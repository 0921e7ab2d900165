"""Topological horseshoe for the quadratic map.

On ``D_x = (-(mu - gamma), mu - gamma)`` the image of every horizontal line
``{y = const}`` is an arc that starts and ends left of ``D_x`` and peaks to
the right of it. When ``sqrt(2 (mu + gamma)) < mu - gamma`` each arc crosses
the slab ``|x'| <= mu - gamma`` twice, which is the covering relation checked
numerically here.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .map_core import QUADRATIC, MapParams, evaluate_f

STRIP_XTOL = 1e-10


class UndersampledError(ValueError):
    def __init__(self, message: str, suggested: int):
        super().__init__(f"{message}; try points_per_line >= {suggested}")
        self.suggested = suggested


@dataclass
class HorseshoeReport:
    condition_holds: bool
    escape_inner: tuple
    escape_outer_threshold: float
    half_width: float
    gamma: float
    strip_preimages: Optional[tuple] = None
    strip_hulls: Optional[tuple] = None
    strips_disjoint: bool = False
    covering_verified: bool = False
    lines_checked: int = 0
    failures: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def horseshoe_condition(mu: float, gamma: float) -> bool:
    """``sqrt(2 (mu + gamma)) < mu - gamma``."""
    if mu <= 0 or gamma < 0:
        raise ValueError("need mu > 0 and gamma >= 0")
    if mu - gamma <= 0:
        raise ValueError("domain degenerate: mu - gamma <= 0")
    return math.sqrt(2.0 * (mu + gamma)) < mu - gamma


def escape_intervals(mu: float, gamma: float) -> tuple:
    """``((-sqrt(2 gamma), sqrt(2 gamma)), sqrt(2 (mu + gamma)))``.

    Points in the inner interval are pushed right of ``D_x`` by the upper
    auxiliary map; points beyond the outer threshold are pushed left of it
    by both auxiliary maps.
    """
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    r = math.sqrt(2.0 * gamma)
    return (-r, r), math.sqrt(2.0 * (mu + gamma))


def horseshoe_gamma(p: MapParams) -> float:
    """y-radius compatible with ``alpha = mu - gamma``: solves
    ``gamma = (mu - gamma) |b| / (1 - a_bound)``."""
    mu = p.f.canonical().mu
    return mu * abs(p.b) / (1.0 - p.a_bound + abs(p.b))


def _line_offsets(p: MapParams, gamma: float, line_count: int) -> np.ndarray:
    """``sum(y)`` for ``line_count`` lines spread through the open l1-ball.

    Only ``sum(y)`` enters the image x-coordinate; the extreme values
    ``+-gamma (1 - 1e-9)`` are always included.
    """
    if gamma == 0 or line_count == 1:
        return np.zeros(1) if gamma == 0 else np.array([0.0])
    r = gamma * (1.0 - 1e-9)
    return np.linspace(-r, r, line_count)


def _runs(lab: np.ndarray) -> list:
    """``(label, start, stop)`` for each maximal constant run."""
    cut = np.flatnonzero(lab[1:] != lab[:-1]) + 1
    starts = np.r_[0, cut]
    stops = np.r_[cut, lab.size]
    return [(int(lab[s]), int(s), int(e)) for s, e in zip(starts, stops)]


def _edge(f, c: float, level: float, x0: float, x1: float) -> float:
    g = lambda t: float(evaluate_f(f, t)) + c - level
    g0, g1 = g(x0), g(x1)
    if g0 == 0.0:
        return float(x0)
    if g1 == 0.0 or g0 * g1 > 0:
        return float(x1)
    return brentq(g, x0, x1, xtol=STRIP_XTOL)


def verify_covering(p: MapParams, line_count: int = 100, points_per_line: int = 10_000,
                    half_width: Optional[float] = None, gamma: Optional[float] = None) -> HorseshoeReport:
    """Check that each line's image arc crosses the slab ``|x'| <= w`` in
    monotone full-height branches, ``w = mu - gamma``.

    For the quadratic map each arc must start and end left of the slab, peak
    right of it inside the inner escape interval, and cross exactly twice.
    For other ``f`` pass ``half_width`` and ``gamma``; the closed-form
    condition is skipped and at least two full crossings are required.
    """
    f = p.f.canonical()
    quadratic = f.kind == QUADRATIC
    if not quadratic and (half_width is None or gamma is None):
        raise ValueError("non-quadratic f needs explicit half_width and gamma")
    if gamma is None:
        gamma = horseshoe_gamma(p)
    if quadratic:
        w = (f.mu - gamma) if half_width is None else float(half_width)
        inner, outer = escape_intervals(f.mu, gamma)
        cond = horseshoe_condition(f.mu, gamma)
    else:
        w = float(half_width)
        inner, outer, cond = None, None, True
    report = HorseshoeReport(cond, inner, outer, w, gamma)
    if not cond:
        return report
    if points_per_line < 3:
        raise UndersampledError("need at least 3 points per line", 3)

    crit = f.critical_points()
    x = np.union1d(np.linspace(-w, w, points_per_line), crit[np.abs(crit) < w])
    fx = evaluate_f(f, x)
    strips = None
    ok = True
    for k, c in enumerate(_line_offsets(p, gamma, line_count)):
        xb = fx + c
        # closed outer regions so an apex exactly on the edge still counts
        lab = np.where(xb <= -w, -1, np.where(xb >= w, 1, 0))
        if np.any(np.abs(np.diff(lab)) == 2):
            slope = float(np.max(np.abs(np.diff(xb) / np.diff(x))))
            raise UndersampledError("image arc jumps across the slab between samples",
                                    max(2 * points_per_line, int(math.ceil(2 * slope)) + 2))
        runs = _runs(lab)
        problem = None
        if runs[0][0] == 0 or runs[-1][0] == 0:
            problem = {"endpoint_inside": True}
        elif quadratic and [r[0] for r in runs] != [-1, 0, 1, 0, -1]:
            problem = {"pattern": [r[0] for r in runs]}
        elif quadratic and not inner[0] <= x[int(np.argmax(xb))] <= inner[1]:
            problem = {"apex_x": float(x[int(np.argmax(xb))])}
        line_strips = []
        if problem is None:
            for i, (label, s, e) in enumerate(runs):
                if label != 0:
                    continue
                before, after = runs[i - 1][0], runs[i + 1][0]
                if before == after:
                    problem = {"fold_inside_slab": float(x[s])}
                    break
                seg = xb[s - 1: e + 1]
                if not np.all(np.diff(seg) * (after - before) > 0):
                    problem = {"monotone": False, "x": float(x[s])}
                    break
                lo = _edge(f, c, before * w, x[s - 1], x[s])
                hi = _edge(f, c, after * w, x[e - 1], x[e])
                line_strips.append((lo, hi))
            if problem is None and len(line_strips) < 2:
                problem = {"crossings": len(line_strips)}
        if problem is not None:
            ok = False
            report.failures.append({"line": k, "offset": float(c), **problem})
            continue
        if strips is None:
            strips = [list(s) for s in line_strips]
            hulls = [list(s) for s in line_strips]
        elif len(strips) != len(line_strips):
            ok = False
            report.failures.append({"line": k, "offset": float(c), "crossings": len(line_strips)})
            continue
        else:
            for acc, hull, (lo, hi) in zip(strips, hulls, line_strips):
                acc[0], acc[1] = max(acc[0], lo), min(acc[1], hi)
                hull[0], hull[1] = min(hull[0], lo), max(hull[1], hi)
    report.lines_checked = len(_line_offsets(p, gamma, line_count))
    if strips is not None:
        if any(lo > hi for lo, hi in strips):
            ok = False
            report.failures.append({"empty_strip_intersection": True})
        report.strip_preimages = tuple(tuple(s) for s in strips)
        report.strip_hulls = tuple(tuple(s) for s in hulls)
        report.strips_disjoint = all(a[1] < b[0] for a, b in zip(strips, strips[1:]))
    # with gamma = 0 the two quadratic strips meet at the critical point
    report.covering_verified = ok and strips is not None and (
        report.strips_disjoint or gamma == 0)
    return report


def arc_points(p: MapParams, line_count: int = 5, points_per_line: int = 200,
               half_width: Optional[float] = None, gamma: Optional[float] = None) -> np.ndarray:
    """Rows ``(line, x, x', y'_1)`` of the image arcs, for plotting."""
    f = p.f.canonical()
    if gamma is None:
        gamma = horseshoe_gamma(p)
    w = (f.mu - gamma) if half_width is None else float(half_width)
    x = np.linspace(-w, w, points_per_line)
    fx = evaluate_f(f, x)
    rows = []
    for k, c in enumerate(_line_offsets(p, gamma, line_count)):
        rows.append(np.column_stack([np.full_like(x, k), x, fx + c, p.b * x]))
    return np.vstack(rows)
