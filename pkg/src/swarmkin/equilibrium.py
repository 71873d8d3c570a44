"""Steady states: normalization constants and the analytic (quasi-)stationary densities.

The stationary density is Gaussian outside the target ball and uniform
inside.  Its weights ``m1`` (outer) and ``m2`` (inner mass) follow from unit
mass plus continuity across ``|x - x0| = delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, erfcx

from .model_core import ConfigError, as_points

# Gamma(d/2 + 1) for the supported dimensions
_GAMMA_HALF_D_PLUS_1 = {1: math.sqrt(math.pi) / 2.0, 2: 1.0}

BISECTION_TOL = 1e-12


class BracketError(RuntimeError):
    """The residual did not change sign over the scanned interval."""

    def __init__(self, lo: float, hi: float):
        super().__init__(f"no sign change of the mass residual for sigma2 in [{lo:g}, {hi:g}]")
        self.interval = (lo, hi)


def _check_inner_mass(m2: float, delta: float) -> None:
    if not (0.0 < m2 < 1.0):
        raise ConfigError(f"inner mass m2 must lie in (0, 1), got {m2}")
    if not delta > 0:
        raise ConfigError(f"delta must be positive, got {delta}")


def ball_volume(delta: float, dim: int) -> float:
    return delta**dim * math.pi ** (dim / 2) / _GAMMA_HALF_D_PLUS_1[dim]


def system1_residuals(m1: float, m2: float, sigma2: float, delta: float) -> tuple[float, float]:
    """Residuals of (mass, continuity) for the 1D steady state."""
    r_mass = m1 * erfc(delta / math.sqrt(2 * sigma2)) + m2 - 1.0
    r_cont = m1 / math.sqrt(2 * math.pi * sigma2) * math.exp(-(delta**2) / (2 * sigma2)) - m2 / (2 * delta)
    return r_mass, r_cont


def system2_residuals(m1: float, m2: float, sigma2: float, delta: float) -> tuple[float, float]:
    e = math.exp(-(delta**2) / (2 * sigma2))
    return m1 * e + m2 - 1.0, m1 / (2 * sigma2) * e - m2 / delta**2


def _m1_from_continuity_1d(m2: float, sigma2: float, delta: float) -> float:
    return m2 / (2 * delta) * math.sqrt(2 * math.pi * sigma2) * math.exp(delta**2 / (2 * sigma2))


def _mass_residual_1d(sigma2: float, m2: float, delta: float) -> float:
    # m1 eliminated through continuity; erfcx keeps exp(+)*erfc finite for small sigma2
    s = math.sqrt(2 * sigma2)
    return m2 * math.sqrt(math.pi) * s / (2 * delta) * erfcx(delta / s) + m2 - 1.0


def solve_constants_1d(m2: float, delta: float, tol: float = BISECTION_TOL) -> tuple[float, float]:
    """Return ``(m1, sigma2)`` giving inner mass ``m2`` on ``|x - x0| <= delta``."""
    _check_inner_mass(m2, delta)
    # the residual increases with sigma2; scan in units of delta^2
    lo_scan, hi_scan = 1e-4 * delta**2, 1e8 * delta**2
    grid = np.geomspace(lo_scan, hi_scan, 600)
    vals = [_mass_residual_1d(s, m2, delta) for s in grid]
    lo = hi = None
    for a, b, ra, rb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if ra == 0.0:
            lo = hi = a
            break
        if ra * rb < 0:
            lo, hi = a, b
            break
    if lo is None:
        raise BracketError(lo_scan, hi_scan)
    r_lo = _mass_residual_1d(lo, m2, delta)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        r_mid = _mass_residual_1d(mid, m2, delta)
        if r_mid == 0.0:
            lo = hi = mid
            break
        if (r_mid < 0) == (r_lo < 0):
            lo, r_lo = mid, r_mid
        else:
            hi = mid
    sigma2 = float(0.5 * (lo + hi))
    return _m1_from_continuity_1d(m2, sigma2, delta), sigma2


def solve_constants_2d(m2: float, delta: float) -> tuple[float, float]:
    _check_inner_mass(m2, delta)
    sigma2 = delta**2 * (1.0 - m2) / (2.0 * m2)
    m1 = (1.0 - m2) * math.exp(delta**2 / (2.0 * sigma2))
    return m1, sigma2


def solve_mass_1d(sigma2: float, delta: float) -> tuple[float, float]:
    """Return ``(m1, m2)`` for given diffusion and radius (a linear 2x2 solve)."""
    if not (sigma2 > 0 and delta > 0):
        raise ConfigError("sigma2 and delta must be positive")
    a = erfc(delta / math.sqrt(2 * sigma2))
    b = math.exp(-(delta**2) / (2 * sigma2)) / math.sqrt(2 * math.pi * sigma2)
    m1 = 1.0 / (a + 2 * delta * b)
    return m1, 2 * delta * b * m1


def solve_mass_2d(sigma2: float, delta: float) -> tuple[float, float]:
    if not (sigma2 > 0 and delta > 0):
        raise ConfigError("sigma2 and delta must be positive")
    e = math.exp(-(delta**2) / (2 * sigma2))
    m1 = 1.0 / (e * (1.0 + delta**2 / (2 * sigma2)))
    return m1, 1.0 - m1 * e


@dataclass(frozen=True)
class EquilibriumProfile:
    m1: float
    m2: float
    sigma2: float
    delta: float
    x0: tuple[float, ...] = (0.0,)
    dim: int = 1

    def __post_init__(self):
        x0 = tuple(float(v) for v in np.atleast_1d(self.x0))
        if len(x0) == 1 and self.dim == 2:
            x0 = x0 * 2
        object.__setattr__(self, "x0", x0)
        if self.dim not in _GAMMA_HALF_D_PLUS_1:
            raise ConfigError(f"dim must be 1 or 2, got {self.dim}")
        if not self.m1 > 0:
            raise ConfigError(f"m1 must be positive, got {self.m1}")
        _check_inner_mass(self.m2, self.delta)
        if not self.sigma2 > 0:
            raise ConfigError(f"sigma2 must be positive, got {self.sigma2}")

    @classmethod
    def from_inner_mass(cls, m2: float, delta: float, dim: int = 1, x0=(0.0,)) -> EquilibriumProfile:
        solver = solve_constants_1d if dim == 1 else solve_constants_2d
        m1, sigma2 = solver(m2, delta)
        return cls(m1, m2, sigma2, delta, x0, dim)

    @classmethod
    def from_sigma2(cls, sigma2: float, delta: float, dim: int = 1, x0=(0.0,)) -> EquilibriumProfile:
        solver = solve_mass_1d if dim == 1 else solve_mass_2d
        m1, m2 = solver(sigma2, delta)
        return cls(m1, m2, sigma2, delta, x0, dim)

    @property
    def inner_value(self) -> float:
        return self.m2 / ball_volume(self.delta, self.dim)

    def residuals(self) -> tuple[float, float]:
        fn = system1_residuals if self.dim == 1 else system2_residuals
        return fn(self.m1, self.m2, self.sigma2, self.delta)

    def __call__(self, x):
        return f_infty_eval(self, x)


def _profile_at(profile: EquilibriumProfile, center, x):
    pts = as_points(x, profile.dim)
    r2 = np.sum((pts - np.asarray(center, dtype=float)) ** 2, axis=-1)
    s2 = profile.sigma2
    gauss = profile.m1 / (2 * math.pi * s2) ** (profile.dim / 2) * np.exp(-r2 / (2 * s2))
    return np.where(r2 >= profile.delta**2, gauss, profile.inner_value)


def f_infty_eval(profile: EquilibriumProfile, x):
    return _profile_at(profile, profile.x0, x)


def f_q_eval(profile: EquilibriumProfile, xtilde0, x):
    """Quasi-stationary density: the steady state recentred at ``xtilde0``."""
    return _profile_at(profile, xtilde0, x)
