"""Model constants, target domain, interaction kernels and pointwise coefficients.

Everything here is a pure function of its inputs and is shared by the
particle and grid solvers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import GridField

KERNEL_NAMES = ("uniform", "cucker_smale")


class ConfigError(ValueError):
    """Invalid parameters or solver configuration."""


def as_points(x, dim: int) -> np.ndarray:
    """Coerce ``x`` to an array of points with a trailing axis of length ``dim``."""
    x = np.asarray(x, dtype=float)
    if dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != dim:
        raise ValueError(f"expected points in R^{dim}, got trailing axis {x.shape[-1]}")
    return x


@dataclass(frozen=True)
class ModelParams:
    lam: float
    mu: float
    sigma2: float
    delta: float
    x0: tuple[float, ...] = (0.0,)
    dim: int = 1

    def __post_init__(self):
        x0 = tuple(float(v) for v in np.atleast_1d(self.x0))
        if len(x0) == 1 and self.dim == 2:
            x0 = x0 * 2
        object.__setattr__(self, "x0", x0)
        errors = self.validation_errors()
        if errors:
            raise ConfigError("; ".join(errors))

    def validation_errors(self) -> list[str]:
        errs = []
        if self.dim not in (1, 2):
            errs.append(f"dim must be 1 or 2, got {self.dim}")
        if len(self.x0) != self.dim:
            errs.append(f"x0 must have {self.dim} coordinates, got {len(self.x0)}")
        if not (0.0 <= self.lam <= 1.0):
            errs.append(f"lambda must lie in [0, 1], got {self.lam}")
        if not (0.0 <= self.mu <= 1.0):
            errs.append(f"mu must lie in [0, 1], got {self.mu}")
        if abs(self.lam + self.mu - 1.0) > 1e-12:
            errs.append(f"lambda + mu must equal 1, got {self.lam + self.mu!r}")
        if not self.sigma2 > 0:
            errs.append(f"sigma2 must be positive, got {self.sigma2}")
        if not self.delta > 0:
            errs.append(f"delta must be positive, got {self.delta}")
        return errs

    @property
    def center(self) -> np.ndarray:
        return np.array(self.x0)

    @property
    def domain(self) -> TargetDomain:
        return TargetDomain(self.x0, self.delta)

    @property
    def kappa_max(self) -> float:
        return self.sigma2 + 0.5 * self.delta**2


@dataclass(frozen=True)
class InteractionKernel:
    """Symmetric communication weight P(x, y) with values in [0, 1]."""

    name: str = "uniform"
    gamma: float = 1.0

    def __post_init__(self):
        if self.name not in KERNEL_NAMES:
            raise ConfigError(f"unknown kernel {self.name!r}; valid names: {', '.join(KERNEL_NAMES)}")
        if self.name == "cucker_smale" and not self.gamma > 0:
            raise ConfigError(f"Cucker-Smale exponent must be positive, got {self.gamma}")

    @property
    def is_uniform(self) -> bool:
        return self.name == "uniform"

    def of_dist2(self, r2):
        r2 = np.asarray(r2, dtype=float)
        if self.is_uniform:
            return np.ones_like(r2)
        return (1.0 + r2) ** (-self.gamma)

    def __call__(self, x, y):
        return kernel_eval(self, x, y)


def kernel_eval(kernel: InteractionKernel, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 0 or y.ndim == 0:
        r2 = (x - y) ** 2
    else:
        r2 = np.sum((x - y) ** 2, axis=-1)
    return kernel.of_dist2(r2)


@dataclass(frozen=True)
class TargetDomain:
    """Closed ball ``|x - center| <= radius``."""

    center: tuple[float, ...]
    radius: float

    def indicator_complement(self, x):
        return indicator_complement(self, x)


def indicator_complement(domain: TargetDomain, x):
    c = np.asarray(domain.center, dtype=float)
    pts = as_points(x, c.size)
    r2 = np.sum((pts - c) ** 2, axis=-1)
    return (r2 > domain.radius**2).astype(float)


def kappa_eval(params: ModelParams, x, center=None):
    """Diffusion ``sigma2 + (delta^2 - |x-center|^2)/2`` inside the ball, ``sigma2`` outside.

    With ``center = x0`` this is the time-independent coefficient of the
    uniform-interaction surrogate.
    """
    c = params.center if center is None else np.asarray(center, dtype=float)
    pts = as_points(x, params.dim)
    r2 = np.sum((pts - c) ** 2, axis=-1)
    inner = params.sigma2 + 0.5 * (params.delta**2 - r2)
    return np.where(r2 < params.delta**2, inner, params.sigma2)


def _interaction_particles(kernel: InteractionKernel, x: np.ndarray, swarm: np.ndarray) -> np.ndarray:
    n = swarm.shape[0]
    if kernel.is_uniform:
        return x - swarm.mean(axis=0)
    out = np.empty_like(x)
    chunk = max(1, 2_000_000 // max(n, 1))
    for s in range(0, x.shape[0], chunk):
        diff = x[s : s + chunk, None, :] - swarm[None, :, :]
        w = kernel.of_dist2(np.sum(diff**2, axis=-1))
        out[s : s + chunk] = np.einsum("mn,mnd->md", w, diff) / n
    return out


def _interaction_grid(kernel: InteractionKernel, x: np.ndarray, swarm: GridField) -> np.ndarray:
    ys = swarm.points().reshape(-1, swarm.dim)
    fw = swarm.values.ravel() * swarm.cell_volume
    if kernel.is_uniform:
        return x * fw.sum() - fw @ ys
    out = np.empty_like(x)
    for i, xi in enumerate(x):
        diff = xi - ys
        w = kernel.of_dist2(np.sum(diff**2, axis=-1)) * fw
        out[i] = w @ diff
    return out


def drift_B(params: ModelParams, kernel: InteractionKernel, x, swarm) -> np.ndarray:
    """Relaxation toward ``x0`` plus the kernel-weighted pull toward the swarm.

    ``swarm`` is either a :class:`GridField` (midpoint quadrature) or an
    ``(N, d)`` array of particle positions (empirical average, 1/N weight).
    """
    pts = as_points(x, params.dim)
    flat = pts.reshape(-1, params.dim)
    if isinstance(swarm, GridField):
        if swarm.mass <= 0:
            raise ValueError("swarm density has zero mass")
        inter = _interaction_grid(kernel, flat, swarm)
    else:
        swarm = as_points(swarm, params.dim).reshape(-1, params.dim)
        if swarm.shape[0] == 0:
            raise ValueError("empty particle set")
        inter = _interaction_particles(kernel, flat, swarm)
    out = params.lam * (flat - params.center) + params.mu * inter
    return out.reshape(pts.shape)


def shifted_center(params: ModelParams, u) -> np.ndarray:
    """Quasi-stationary center ``lam*x0 + mu*u``."""
    return params.lam * params.center + params.mu * np.asarray(u, dtype=float)


def mean_exact(params: ModelParams, u0, t):
    """Closed-form mean ``x0 + (u0 - x0) exp(-lam t)``; broadcasts over ``t``."""
    u0 = np.asarray(u0, dtype=float)
    t = np.asarray(t, dtype=float)
    decay = np.exp(-params.lam * t)[..., None] if t.ndim else np.exp(-params.lam * t)
    return params.center + (u0 - params.center) * decay


@dataclass
class Trajectory:
    """Time series shared by the particle and grid solvers.

    ``mass`` is the grid mass, or the particle count for particle runs.
    """

    times: np.ndarray
    mean: np.ndarray
    energy: np.ndarray
    mass: np.ndarray
    entropy: np.ndarray | None = None
    snapshots: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
