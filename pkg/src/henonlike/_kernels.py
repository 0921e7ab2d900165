"""Compiled inner loops for the brute-force oracles."""

import numba
import numpy as np

from .map_core import CUBIC, QUADRATIC

KIND_CODES = {QUADRATIC: 0, CUBIC: 1}
POLY_CODE = 2


@numba.njit(cache=True, nogil=True, error_model="numpy")
def trap_margins(X0, kind, mu, coeffs, b, a, iterations, amin, amax, gamma):
    """Per-seed minimum distance to the x- and y-boundaries of ``D_alpha``
    over steps ``1 .. iterations``.

    All seeds advance in lock-step over struct-of-arrays storage so the
    per-seed loops vectorise. Overflow shows up as a ``-inf`` margin before
    any NaN can form, so no separate finiteness check is needed.
    """
    m = X0.shape[0]
    n = X0.shape[1] - 1
    x = np.ascontiguousarray(X0[:, 0])
    Y = np.ascontiguousarray(X0[:, 1:].T)
    x_margin = np.full(m, np.inf)
    y_margin = np.full(m, np.inf)
    acc = np.empty(m)
    fx = np.empty(m)
    for _ in range(iterations):
        acc[:] = 0.0
        for j in range(n):
            yj = Y[j]
            for s in range(m):
                acc[s] += yj[s]
        if kind == 0:
            for s in range(m):
                fx[s] = mu - x[s] * x[s]
        elif kind == 1:
            for s in range(m):
                xs = x[s]
                fx[s] = xs * xs * xs - mu * xs
        else:
            for s in range(m):
                xs = x[s]
                v = coeffs[coeffs.size - 1]
                for k in range(coeffs.size - 2, -1, -1):
                    v = v * xs + coeffs[k]
                fx[s] = v
        for j in range(n - 1, 0, -1):
            aj = a[j - 1]
            src = Y[j - 1]
            dst = Y[j]
            for s in range(m):
                dst[s] = aj * src[s]
        y0 = Y[0]
        for s in range(m):
            y0[s] = b * x[s]
            x[s] = fx[s] + acc[s]
        acc[:] = 0.0
        for j in range(n):
            yj = Y[j]
            for s in range(m):
                acc[s] += abs(yj[s])
        for s in range(m):
            xs = x[s]
            x_margin[s] = min(x_margin[s], min(xs - amin, amax - xs))
            y_margin[s] = min(y_margin[s], gamma - acc[s])
    return x_margin, y_margin


def nonlinearity_args(f):
    kind = KIND_CODES.get(f.kind, POLY_CODE)
    coeffs = np.asarray(f.coefficients, dtype=np.float64)
    return kind, float(f.mu), coeffs
