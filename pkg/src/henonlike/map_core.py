"""Multidimensional Hénon-like maps.

The map acts on states ``(x, y)`` with scalar ``x`` and ``y`` in R^n::

    x' = f(x) + y_1 + ... + y_n
    y'_1 = b * x
    y'_{i+1} = a_i * y_i,   i = 1 .. n-1

``f`` is a polynomial nonlinearity, ``b`` the coupling and ``a_i`` the
coefficients of a lower shift matrix. Everything here is a pure function of
its inputs; the vectorised ``*_array`` variants operate on ``(m, n + 1)``
arrays whose first column is ``x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

ESCAPE_RADIUS = 1e100

QUADRATIC = "quadratic"
CUBIC = "cubic"
POLYNOMIAL = "polynomial"
_KINDS = (QUADRATIC, CUBIC, POLYNOMIAL)


class ParameterError(ValueError):
    """Rejected map parameters.

    ``constraint`` names the violated condition and ``field`` the offending
    parameter so that callers (the CLI in particular) can report it in a
    machine-readable way.
    """

    def __init__(self, message: str, *, constraint: str, field: str, value=None):
        super().__init__(message)
        self.constraint = constraint
        self.field = field
        self.value = value

    def to_dict(self) -> dict:
        return {
            "error": "invalid_parameter",
            "field": self.field,
            "constraint": self.constraint,
            "value": self.value,
            "message": str(self),
        }


class Escaped(ArithmeticError):
    """An orbit left the ball of radius ``ESCAPE_RADIUS``.

    Escape is data, not a numerical fault: ``step_index`` is the index of
    the first state outside the ball and ``orbit`` the segment computed up
    to and including it.
    """

    def __init__(self, step_index: int, orbit: list):
        super().__init__(f"orbit escaped at step {step_index}")
        self.step_index = step_index
        self.orbit = orbit


@dataclass(frozen=True)
class Nonlinearity:
    """Scalar nonlinearity ``f``.

    Use the :meth:`quadratic`, :meth:`cubic` and :meth:`polynomial`
    constructors. ``coeffs`` is lowest degree first.
    """

    kind: str
    mu: float = 0.0
    coeffs: tuple = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ParameterError(
                f"unknown nonlinearity kind {self.kind!r}",
                constraint=f"kind in {_KINDS}",
                field="kind",
                value=self.kind,
            )
        if self.kind == POLYNOMIAL:
            c = tuple(float(v) for v in self.coeffs)
            if not c:
                raise ParameterError(
                    "polynomial needs at least one coefficient",
                    constraint="len(coeffs) >= 1",
                    field="coeffs",
                    value=[],
                )
            object.__setattr__(self, "coeffs", c)
            object.__setattr__(self, "mu", 0.0)
        else:
            object.__setattr__(self, "mu", float(self.mu))
            object.__setattr__(self, "coeffs", ())

    @classmethod
    def quadratic(cls, mu: float) -> "Nonlinearity":
        """``f(x) = mu - x**2``."""
        return cls(QUADRATIC, mu=mu)

    @classmethod
    def cubic(cls, mu: float) -> "Nonlinearity":
        """``f(x) = x**3 - mu * x``."""
        return cls(CUBIC, mu=mu)

    @classmethod
    def polynomial(cls, coeffs: Sequence[float]) -> "Nonlinearity":
        return cls(POLYNOMIAL, coeffs=tuple(coeffs))

    @property
    def coefficients(self) -> tuple:
        """Power-series coefficients, lowest degree first."""
        if self.kind == QUADRATIC:
            return (self.mu, 0.0, -1.0)
        if self.kind == CUBIC:
            return (0.0, -self.mu, 0.0, 1.0)
        return self.coeffs

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def as_polynomial(self) -> "Nonlinearity":
        return Nonlinearity.polynomial(self.coefficients)

    def canonical(self) -> "Nonlinearity":
        """Recognise the quadratic and cubic families in a polynomial."""
        if self.kind != POLYNOMIAL:
            return self
        c = self.coeffs
        if len(c) == 3 and c[1] == 0.0 and c[2] == -1.0:
            return Nonlinearity.quadratic(c[0])
        if len(c) == 4 and c[0] == 0.0 and c[2] == 0.0 and c[3] == 1.0:
            return Nonlinearity.cubic(-c[1])
        return self

    def critical_points(self) -> np.ndarray:
        """Real roots of ``f'``, ascending."""
        if self.kind == QUADRATIC:
            return np.array([0.0])
        if self.kind == CUBIC:
            if self.mu > 0:
                xi = math.sqrt(self.mu / 3.0)
                return np.array([-xi, xi])
            if self.mu == 0:
                return np.array([0.0])
            return np.array([])
        d = np.polynomial.polynomial.polyder(np.asarray(self.coeffs))
        # leading coefficients below rounding level only produce spurious huge roots
        big = np.flatnonzero(np.abs(d) > 1e-14 * np.max(np.abs(d), initial=0.0))
        d = d[: big[-1] + 1] if big.size else d[:0]
        if d.size <= 1:
            return np.array([])
        roots = np.polynomial.polynomial.polyroots(d)
        real = np.sort(roots[np.abs(roots.imag) <= 1e-12 * np.maximum(1.0, np.abs(roots))].real)
        if real.size < 2:
            return real
        # repeated roots of f' come back as near-duplicates
        keep = np.r_[True, np.diff(real) > 1e-9 * np.maximum(1.0, np.abs(real[1:]))]
        return real[keep]

    def to_dict(self) -> dict:
        if self.kind == POLYNOMIAL:
            return {"kind": self.kind, "coeffs": list(self.coeffs)}
        return {"kind": self.kind, "mu": self.mu}


def evaluate_f(f: Nonlinearity, x):
    """Evaluate ``f`` at a scalar or array ``x``; overflow propagates as inf."""
    with np.errstate(over="ignore", invalid="ignore"):
        if f.kind == QUADRATIC:
            return f.mu - x * x
        if f.kind == CUBIC:
            return x * x * x - f.mu * x
        acc = 0.0 * x + f.coeffs[-1]
        for c in reversed(f.coeffs[:-1]):
            acc = acc * x + c
        return acc


def derivative_f(f: Nonlinearity, x):
    """Analytic ``f'(x)``."""
    with np.errstate(over="ignore", invalid="ignore"):
        if f.kind == QUADRATIC:
            return -2.0 * x
        if f.kind == CUBIC:
            return 3.0 * x * x - f.mu
        c = f.coeffs
        if len(c) == 1:
            return 0.0 * x
        acc = 0.0 * x + (len(c) - 1) * c[-1]
        for k in range(len(c) - 2, 0, -1):
            acc = acc * x + k * c[k]
        return acc


@dataclass(frozen=True)
class MapParams:
    """Parameters of the map: nonlinearity ``f``, coupling ``b`` and shift
    coefficients ``a`` (length ``n - 1``).

    ``|b| < 1`` and ``|a_i| < 1`` are enforced on construction.
    """

    f: Nonlinearity
    b: float
    a: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        if not math.isfinite(self.b) or abs(self.b) >= 1.0:
            raise ParameterError(
                f"coupling b={self.b} violates |b| < 1",
                constraint="|b| < 1",
                field="b",
                value=self.b,
            )
        for i, ai in enumerate(self.a):
            if not math.isfinite(ai) or abs(ai) >= 1.0:
                raise ParameterError(
                    f"shift coefficient a[{i}]={ai} violates |a_i| < 1",
                    constraint="|a_i| < 1",
                    field=f"a[{i}]",
                    value=ai,
                )

    @classmethod
    def with_dimension(cls, f: Nonlinearity, b: float, n: int, a: float = 0.0) -> "MapParams":
        """All shift coefficients equal to ``a``."""
        if n < 1:
            raise ParameterError("n must be positive", constraint="n >= 1", field="n", value=n)
        return cls(f, b, (a,) * (n - 1))

    @property
    def n(self) -> int:
        return len(self.a) + 1

    @property
    def dim(self) -> int:
        return len(self.a) + 2

    @property
    def a_bound(self) -> float:
        """``max |a_i|``; zero when there are no shift coefficients."""
        return max((abs(v) for v in self.a), default=0.0)

    def replace(self, **changes) -> "MapParams":
        kw = {"f": self.f, "b": self.b, "a": self.a}
        kw.update(changes)
        return MapParams(**kw)

    def to_dict(self) -> dict:
        return {**self.f.to_dict(), "b": self.b, "a": list(self.a)}


@dataclass(frozen=True)
class State:
    """A phase-space point ``(x, y)``; ``y`` is stored read-only."""

    x: float
    y: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def __post_init__(self):
        y = np.array(self.y, dtype=float).reshape(-1)
        y.setflags(write=False)
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", y)

    @classmethod
    def from_array(cls, v) -> "State":
        v = np.asarray(v, dtype=float)
        return cls(v[0], v[1:])

    def as_array(self) -> np.ndarray:
        return np.concatenate(([self.x], self.y))

    @property
    def n(self) -> int:
        return self.y.size

    def __eq__(self, other):
        if not isinstance(other, State):
            return NotImplemented
        return self.x == other.x and np.array_equal(self.y, other.y)

    def __hash__(self):
        return hash((self.x, self.y.tobytes()))


def manhattan_norm(v) -> float:
    """Sum of absolute values (l1 norm)."""
    return float(np.sum(np.abs(np.asarray(v, dtype=float))))


def _check_dim(p: MapParams, n: int):
    if n != p.n:
        raise ValueError(f"state has y-dimension {n}, map expects {p.n}")


def step_array(p: MapParams, X: np.ndarray) -> np.ndarray:
    """Apply the map to each row of an ``(m, n + 1)`` array."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("expected a 2-D array of states")
    _check_dim(p, X.shape[1] - 1)
    out = np.empty_like(X)
    x = X[:, 0]
    with np.errstate(over="ignore", invalid="ignore"):
        out[:, 0] = evaluate_f(p.f, x) + X[:, 1:].sum(axis=1)
        out[:, 1] = p.b * x
        if p.n > 1:
            out[:, 2:] = X[:, 1:-1] * np.asarray(p.a)
    return out


def step(p: MapParams, s: State) -> State:
    """One application of the map."""
    _check_dim(p, s.n)
    with np.errstate(over="ignore", invalid="ignore"):
        xbar = evaluate_f(p.f, s.x) + float(np.sum(s.y))
        ybar = np.empty(p.n)
        ybar[0] = p.b * s.x
        ybar[1:] = np.asarray(p.a) * s.y[:-1]
    return State(xbar, ybar)


def _escaped(s: State, radius: float) -> bool:
    return not (abs(s.x) <= radius and manhattan_norm(s.y) <= radius)


def iterate(p: MapParams, s: State, k: int, escape_radius: float = ESCAPE_RADIUS) -> list:
    """Orbit segment ``[s, T(s), ..., T^k(s)]``.

    Raises :class:`Escaped` (carrying the partial segment) as soon as a state
    leaves the ball of radius ``escape_radius``.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    _check_dim(p, s.n)
    orbit = [s]
    for i in range(1, k + 1):
        s = step(p, s)
        orbit.append(s)
        if _escaped(s, escape_radius):
            raise Escaped(i, orbit)
    return orbit


def iterate_stream(p: MapParams, s: State, k: int,
                   escape_radius: float = ESCAPE_RADIUS) -> Iterator[State]:
    """Lazy version of :func:`iterate` for long runs (yields ``T^1 .. T^k``)."""
    _check_dim(p, s.n)
    for i in range(1, k + 1):
        s = step(p, s)
        if _escaped(s, escape_radius):
            raise Escaped(i, [s])
        yield s


def iterate_endpoint(p: MapParams, s: State, k: int,
                     escape_radius: float = ESCAPE_RADIUS) -> State:
    end = s
    for end in iterate_stream(p, s, k, escape_radius):
        pass
    return end


def jacobian_at(p: MapParams, x: float) -> np.ndarray:
    """Jacobian of the map; it depends on ``x`` only."""
    d = p.dim
    J = np.zeros((d, d))
    J[0, 0] = derivative_f(p.f, x)
    J[0, 1:] = 1.0
    J[1, 0] = p.b
    for i, ai in enumerate(p.a):
        J[i + 2, i + 1] = ai
    return J


@dataclass(frozen=True)
class GeneralizedForm:
    """The map in delay coordinates ``v``::

        x' = f(x) + sum_j q_j v_j,   v'_1 = x,   v'_{j+1} = v_j

    conjugate to the original map through ``y_j = q_j v_j``.
    """

    f: Nonlinearity
    q: np.ndarray

    @property
    def scale(self) -> np.ndarray:
        """Diagonal of the change of variables ``y = diag(scale) v``."""
        return self.q

    def step(self, x: float, v: np.ndarray) -> tuple:
        v = np.asarray(v, dtype=float)
        xbar = evaluate_f(self.f, x) + float(self.q @ v)
        vbar = np.concatenate(([x], v[:-1]))
        return xbar, vbar

    def to_state(self, x: float, v) -> State:
        return State(x, self.q * np.asarray(v, dtype=float))

    def from_state(self, s: State) -> tuple:
        if np.any(self.q == 0.0):
            raise ValueError("change of variables is singular (some q_j = 0)")
        return s.x, s.y / self.q


def to_generalized_form(p: MapParams) -> GeneralizedForm:
    """Coefficients ``q`` with ``q_1 = b`` and ``q_{i+1} = a_i q_i``."""
    if p.b == 0.0:
        raise ValueError("degenerate substitution: b = 0")
    q = np.empty(p.n)
    q[0] = p.b
    for i, ai in enumerate(p.a):
        q[i + 1] = ai * q[i]
    q.setflags(write=False)
    return GeneralizedForm(p.f, q)
