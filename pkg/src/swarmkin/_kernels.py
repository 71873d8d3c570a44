"""Compiled inner loops for the grid and particle solvers."""

from __future__ import annotations

import math
import os

import numpy as np
import numba
from numba import njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the system TBB is often too old for numba; prefer layers that always load
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
if os.environ.get("SWARMKIN_THREADS"):
    numba.set_num_threads(int(os.environ["SWARMKIN_THREADS"]))

_GL_X = math.sqrt(0.6)


@njit(cache=True, inline="always")
def _bern(z):
    if z > 700.0:
        z = 700.0
    elif z < -700.0:
        z = -700.0
    if abs(z) < 1e-8:
        return 1.0 - 0.5 * z
    return z / math.expm1(z)


@njit(cache=True, inline="always")
def _kappa_inner(sigma2, delta, perp2, z):
    k = sigma2 + 0.5 * (delta * delta - perp2 - z * z)
    return k if k > sigma2 else sigma2


@njit(cache=True)
def line_rates(f, b, lo_line, dx, perp2, c_line, sigma2, delta, surrogate, out):
    """Add the flux divergence along the last axis of ``f`` into ``out``.

    Rows are independent lines; ``perp2[r]`` is the squared distance of row r
    from the ball centre in the remaining coordinates.
    """
    rows, n = f.shape
    for r in range(rows):
        h2 = delta * delta - perp2[r]
        half = math.sqrt(h2) if h2 > 0.0 else 0.0
        left = c_line - half
        right = c_line + half
        prev = 0.0
        for i in range(n - 1):
            sa = lo_line + i * dx
            sb = sa + dx
            ba = b[r, i]
            slope = (b[r, i + 1] - ba) / dx
            total = dx * 0.5 * (ba + b[r, i + 1])
            p = min(max(left, sa), sb)
            q = min(max(right, sa), sb)
            if q < p:
                q = p
            mid = 0.5 * (p + q)
            inner = (q - p) * (ba + slope * (mid - sa))
            w = (total - inner) / sigma2
            if surrogate:
                hl = 0.5 * (q - p)
                if hl > 0.0:
                    acc = 0.0
                    for j in range(3):
                        if j == 0:
                            s, wt = mid - hl * _GL_X, 5.0 / 9.0
                        elif j == 1:
                            s, wt = mid, 8.0 / 9.0
                        else:
                            s, wt = mid + hl * _GL_X, 5.0 / 9.0
                        z = s - c_line
                        acc += wt * (ba + slope * (s - sa) - z) / _kappa_inner(sigma2, delta, perp2[r], z)
                    w += hl * acc
                zm = sa + 0.5 * dx - c_line
                r2 = perp2[r] + zm * zm
                D = sigma2 + 0.5 * (delta * delta - r2) if r2 < delta * delta else sigma2
            else:
                D = sigma2
            F = D / dx * (_bern(-w) * f[r, i + 1] - _bern(w) * f[r, i])
            out[r, i] += (F - prev) / dx
            prev = F
        out[r, n - 1] -= prev / dx


@njit(cache=True, inline="always")
def _cs_weight(r2, gamma):
    if gamma == 1.0:
        return 1.0 / (1.0 + r2)
    return math.exp(-gamma * math.log1p(r2))


@njit(cache=True, parallel=True)
def cs_interaction(x, gamma, out):
    """``out[i] = (1/N) sum_j P(x_i, x_j) (x_i - x_j)`` with the Cucker-Smale weight.

    The inner sum runs in ascending ``j`` for every ``i``, so the result does
    not depend on the number of threads.
    """
    n, d = x.shape
    if d == 1:
        for i in prange(n):
            xi = x[i, 0]
            acc = 0.0
            for j in range(n):
                d0 = xi - x[j, 0]
                acc += _cs_weight(d0 * d0, gamma) * d0
            out[i, 0] = acc / n
        return
    for i in prange(n):
        xi = x[i, 0]
        yi = x[i, 1]
        acc0 = 0.0
        acc1 = 0.0
        for j in range(n):
            d0 = xi - x[j, 0]
            d1 = yi - x[j, 1]
            wgt = _cs_weight(d0 * d0 + d1 * d1, gamma)
            acc0 += wgt * d0
            acc1 += wgt * d1
        out[i, 0] = acc0 / n
        out[i, 1] = acc1 / n


def grid_rate(values: np.ndarray, bnodes: np.ndarray, lo, dx: float, center, sigma2: float, delta: float, surrogate: bool) -> np.ndarray:
    """Flux divergence over all axes of a 1-d or 2-d field."""
    dim = values.ndim
    out = np.zeros_like(values)
    if dim == 1:
        line_rates(values[None, :], bnodes[0][None, :], lo[0], dx, np.zeros(1), center[0], sigma2, delta, surrogate, out[None, :])
        return out
    y = lo[1] + dx * np.arange(values.shape[1])
    x = lo[0] + dx * np.arange(values.shape[0])
    # lines along axis 1 (rows fixed x), then along axis 0 (columns fixed y)
    line_rates(values, bnodes[1], lo[1], dx, (x - center[0]) ** 2, center[1], sigma2, delta, surrogate, out)
    out_t = np.zeros_like(values.T)
    line_rates(
        np.ascontiguousarray(values.T), np.ascontiguousarray(bnodes[0].T), lo[0], dx, (y - center[1]) ** 2, center[0], sigma2, delta, surrogate, out_t
    )
    return out + out_t.T
