"""Entropy, distance, moment and decay-rate diagnostics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .grid import GridField
from .model_core import InteractionKernel, ModelParams, Trajectory, mean_exact

TINY = 1e-300


def _require_same_grid(f: GridField, g: GridField) -> None:
    if not f.same_grid(g):
        raise ValueError(f"grid mismatch: {f.shape}@{f.lo},dx={f.dx} vs {g.shape}@{g.lo},dx={g.dx}")


def relative_entropy(f: GridField, g: GridField) -> float:
    """Node-sum ``sum f log(f/g) dx^d``; cells with ``f < 1e-300`` contribute zero.

    Returns ``inf`` (with a warning naming the first offending cell) when ``f``
    charges a cell where ``g`` vanishes.
    """
    _require_same_grid(f, g)
    fv, gv = f.values, g.values
    live = fv >= TINY
    bad = live & (gv <= 0)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        warnings.warn(f"relative entropy is infinite: f > 0 where g = 0 at cell {idx}", RuntimeWarning, stacklevel=2)
        return math.inf
    terms = np.zeros_like(fv)
    terms[live] = fv[live] * np.log(fv[live] / gv[live])
    return float(terms.sum() * f.cell_volume)


def l1_distance(f: GridField, g: GridField) -> float:
    _require_same_grid(f, g)
    return float(np.abs(f.values - g.values).sum() * f.cell_volume)


def marginal(f: GridField, axis: int) -> GridField:
    """Integrate out every axis except ``axis``."""
    others = tuple(k for k in range(f.dim) if k != axis)
    vals = f.values.sum(axis=others) * f.dx ** len(others)
    return GridField(vals, (f.lo[axis],), f.dx)


@dataclass
class DecaySeries:
    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have the same length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("decay series contains non-finite values")


@dataclass
class DecayFit:
    power_exponent: float
    power_prefactor: float
    power_residual: float
    exp_rate: float
    exp_prefactor: float
    exp_residual: float
    window: tuple[float, float]
    points: int

    def report(self) -> str:
        return "\n".join(
            [
                f"window        = [{self.window[0]:.6g}, {self.window[1]:.6g}] ({self.points} points)",
                f"power law     : H ~ {self.power_prefactor:.6g} * t^-{self.power_exponent:.6g}  (rms log residual {self.power_residual:.3e})",
                f"exponential   : H ~ {self.exp_prefactor:.6g} * exp(-{self.exp_rate:.6g} t)  (rms log residual {self.exp_residual:.3e})",
            ]
        )


def decay_rate_fit(series: DecaySeries, window: tuple[float, float] | None = None) -> DecayFit:
    """Least-squares fits of ``c t^-p`` (log-log) and ``c e^{-rt}`` (semilog) over ``window``."""
    t, v = series.times, series.values
    if window is None:
        window = (0.5 * t[-1], t[-1])
    sel = (t >= window[0]) & (t <= window[1])
    if sel.sum() < 3:
        raise ValueError(f"need at least 3 points in window {window}, got {int(sel.sum())}")
    tw, vw = t[sel], v[sel]
    if np.any(vw <= 0):
        raise ValueError("decay fit needs positive values in the window")
    logv = np.log(vw)
    if np.any(tw <= 0):
        p_exp = p_pre = p_res = math.nan
    else:
        slope, icpt = np.polyfit(np.log(tw), logv, 1)
        resid = logv - (slope * np.log(tw) + icpt)
        p_exp, p_pre, p_res = -slope, math.exp(icpt), float(np.sqrt(np.mean(resid**2)))
    slope_e, icpt_e = np.polyfit(tw, logv, 1)
    resid_e = logv - (slope_e * tw + icpt_e)
    return DecayFit(
        power_exponent=float(p_exp),
        power_prefactor=float(p_pre),
        power_residual=p_res,
        exp_rate=float(-slope_e),
        exp_prefactor=math.exp(icpt_e),
        exp_residual=float(np.sqrt(np.mean(resid_e**2))),
        window=(float(window[0]), float(window[1])),
        points=int(sel.sum()),
    )


def _interaction_bound(kernel: InteractionKernel, reach: float) -> float:
    """Upper bound of ``|int P(x,y)(x-y) f(y) dy|`` for x in the target ball."""
    if kernel.is_uniform:
        return reach
    g = kernel.gamma
    # max over r of r/(1+r^2)^g
    if g > 0.5:
        r = 1.0 / math.sqrt(2 * g - 1)
        return r / (1 + r * r) ** g
    return reach


@dataclass
class MomentReport:
    times: np.ndarray
    mean_deviation: np.ndarray
    max_mean_deviation: float
    energy: np.ndarray
    energy_bound: np.ndarray
    energy_ok: bool


def energy_bound(params: ModelParams, u0, e0: float, times, *, discontinuous: bool, kernel: InteractionKernel | None = None) -> np.ndarray:
    """Upper envelope for the second moment from the differential inequality.

    ``dE/dt <= c - 2 lam E`` with ``c = d*kappa_max + lam |x0| U + mu U^2``,
    ``U`` bounding ``|u(t)|``.  For the discontinuous drift the parts of the
    drift switched off inside the target add ``lam (|x0|+delta) delta`` and
    ``mu (|x0|+delta) K`` with ``K`` bounding the interaction velocity.
    """
    kernel = kernel or InteractionKernel("uniform")
    t = np.asarray(times, dtype=float)
    x0n = float(np.linalg.norm(params.center))
    U = max(float(np.linalg.norm(u0)), x0n)
    kappa_max = params.sigma2 if discontinuous else params.kappa_max
    c = params.dim * kappa_max + params.lam * x0n * U + params.mu * U**2
    if discontinuous:
        reach = x0n + params.delta
        c += params.lam * reach * params.delta
        c += params.mu * reach * _interaction_bound(kernel, reach + U + reach)
    if params.lam == 0.0:
        return e0 + c * t
    a = 2 * params.lam
    return e0 * np.exp(-a * t) + c / a * (1 - np.exp(-a * t))


def moment_report(record: Trajectory, params: ModelParams, *, discontinuous: bool = False, kernel: InteractionKernel | None = None, energy_slack: float = 0.0) -> MomentReport:
    """Compare recorded means with the closed form and energies with :func:`energy_bound`."""
    if len(record.times) == 0:
        raise ValueError("empty record")
    mean = np.atleast_2d(np.asarray(record.mean, dtype=float))
    if mean.shape[0] != len(record.times):
        mean = mean.T
    u0 = mean[0]
    exact = mean_exact(params, u0, record.times)
    dev = np.linalg.norm(mean - np.reshape(exact, mean.shape), axis=-1)
    bound = energy_bound(params, u0, float(record.energy[0]), record.times, discontinuous=discontinuous, kernel=kernel)
    ok = bool(np.all(record.energy <= bound + energy_slack))
    return MomentReport(record.times, dev, float(dev.max()), np.asarray(record.energy), bound, ok)


def restrict(fine: GridField, coarse: GridField, renormalize: bool = True) -> GridField:
    """Linear interpolation of ``fine`` onto the nodes of ``coarse``."""
    tol = 1e-9 * fine.dx
    for k in range(coarse.dim):
        if coarse.lo[k] < fine.lo[k] - tol or coarse.hi[k] > fine.hi[k] + tol:
            raise ValueError("coarse grid extends beyond the reference grid; interpolation out of range")
    axes = [fine.axis_nodes(k) for k in range(fine.dim)]
    pts = coarse.points().reshape(-1, coarse.dim)
    for k in range(coarse.dim):
        pts[:, k] = np.clip(pts[:, k], axes[k][0], axes[k][-1])
    interp = RegularGridInterpolator(axes, fine.values, method="linear")
    out = coarse.with_values(interp(pts).reshape(coarse.shape))
    if renormalize:
        out.values = out.values / out.mass
    return out


def reference_solution_entropy(fields, times, f_ref: GridField) -> DecaySeries:
    """``H(f(t) | f_ref)`` with the fine reference restricted to the coarse grid."""
    fields = list(fields)
    if not fields:
        raise ValueError("no fields given")
    ref = restrict(f_ref, fields[0])
    vals = [relative_entropy(f, ref) for f in fields]
    return DecaySeries(np.asarray(times, dtype=float), np.asarray(vals), {"reference_nx": f_ref.shape[0]})
