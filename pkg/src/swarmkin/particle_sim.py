"""Euler-Maruyama simulation of the N-agent swarm.

Two particle systems are supported:

* ``discontinuous``: drift ``-B_N(x_i) 1_{D^c}(x_i)`` with constant noise
  ``sqrt(2 sigma2)``, where ``B_N`` is the empirical version of the nonlocal drift;
* ``surrogate``: linear drift ``-(x_i - xt)`` toward ``xt = lam x0 + mu mean(x)``
  with state-dependent noise ``sqrt(2 kappa(x_i, xt))``.

The drift moves particles toward the target.  All drifts are evaluated on
the pre-step configuration before any particle moves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import cs_interaction
from .grid import GridField
from .model_core import (
    ConfigError,
    InteractionKernel,
    ModelParams,
    Trajectory,
    as_points,
    indicator_complement,
    kappa_eval,
    shifted_center,
)

MODELS = ("discontinuous", "surrogate")


def noise_stream(seed: int, step: int) -> np.random.Generator:
    """Counter-based Philox stream keyed by ``(seed, step)``; row i feeds particle i."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(1, step))))


@dataclass
class ParticleEnsemble:
    positions: np.ndarray
    time: float = 0.0
    seed: int = 0
    step: int = 0

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim != 2 or self.positions.shape[0] < 1:
            raise ValueError("positions must be an (N, d) array with N >= 1")

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def mean(self) -> np.ndarray:
        return self.positions.mean(axis=0)

    def energy(self) -> float:
        return float(0.5 * np.mean(np.sum(self.positions**2, axis=1)))

    def advanced(self, positions: np.ndarray, dt: float) -> ParticleEnsemble:
        return ParticleEnsemble(positions, self.time + dt, self.seed, self.step + 1)


@dataclass(frozen=True)
class MixtureComponent:
    weight: float
    mean: tuple[float, ...]
    var: float


def sample_initial_mixture(components, n: int, seed: int, dim: int | None = None) -> ParticleEnsemble:
    """Draw ``n`` agents from a mixture of isotropic Gaussians."""
    comps = [c if isinstance(c, MixtureComponent) else MixtureComponent(*c) for c in components]
    if not comps:
        raise ConfigError("mixture needs at least one component")
    weights = np.array([c.weight for c in comps], dtype=float)
    if np.any(weights <= 0):
        raise ConfigError("mixture weights must be positive")
    if abs(weights.sum() - 1.0) > 1e-12:
        raise ConfigError(f"mixture weights must sum to 1, got {weights.sum()!r}")
    means = np.array([np.atleast_1d(c.mean) for c in comps], dtype=float)
    dim = dim or means.shape[1]
    if means.shape[1] != dim:
        raise ConfigError(f"component means must have {dim} coordinates")
    if n < 1:
        raise ConfigError("need at least one particle")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(0,))))
    which = rng.choice(len(comps), size=n, p=weights / weights.sum())
    sd = np.sqrt(np.array([c.var for c in comps]))
    pos = means[which] + sd[which, None] * rng.standard_normal((n, dim))
    return ParticleEnsemble(pos, 0.0, seed, 0)


def interaction_term(kernel: InteractionKernel, x: np.ndarray) -> np.ndarray:
    """Empirical ``(1/N) sum_j P(x_i, x_j)(x_i - x_j)``; O(N) for the uniform kernel."""
    if kernel.is_uniform:
        return x - x.mean(axis=0)
    out = np.empty_like(x)
    cs_interaction(np.ascontiguousarray(x), float(kernel.gamma), out)
    return out


def em_step_discontinuous(ens: ParticleEnsemble, params: ModelParams, kernel: InteractionKernel, dt: float, noise: bool = True) -> ParticleEnsemble:
    if not dt > 0:
        raise ConfigError("dt must be positive")
    x = ens.positions
    drift = params.lam * (x - params.center) + params.mu * interaction_term(kernel, x)
    active = indicator_complement(params.domain, x)[:, None]
    new = x - drift * active * dt
    if noise:
        xi = noise_stream(ens.seed, ens.step).standard_normal(x.shape)
        new = new + math.sqrt(2.0 * params.sigma2 * dt) * xi
    return ens.advanced(new, dt)


def em_step_surrogate(ens: ParticleEnsemble, params: ModelParams, dt: float, noise: bool = True) -> ParticleEnsemble:
    if not dt > 0:
        raise ConfigError("dt must be positive")
    x = ens.positions
    xt = shifted_center(params, x.mean(axis=0))
    new = x - (x - xt) * dt
    if noise:
        amp = np.sqrt(2.0 * kappa_eval(params, x, xt) * dt)
        xi = noise_stream(ens.seed, ens.step).standard_normal(x.shape)
        new = new + amp[:, None] * xi
    return ens.advanced(new, dt)


@dataclass
class SdeConfig:
    dt: float = 1e-2
    t_end: float = 1.0
    model: str = "discontinuous"
    record_every: int = 1
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self):
        errs = []
        if not self.dt > 0:
            errs.append(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            errs.append(f"t_end must be nonnegative, got {self.t_end}")
        if self.model not in MODELS:
            errs.append(f"unknown particle model {self.model!r}; valid: {', '.join(MODELS)}")
        if self.record_every < 1:
            errs.append("record_every must be >= 1")
        if errs:
            raise ConfigError("; ".join(errs))
        self.snapshot_times = tuple(float(t) for t in self.snapshot_times)


@dataclass
class ParticleRun:
    ensemble: ParticleEnsemble
    record: Trajectory
    steps: int = 0
    extras: dict = field(default_factory=dict)


def run(ens: ParticleEnsemble, params: ModelParams, kernel: InteractionKernel, config: SdeConfig) -> ParticleRun:
    """Advance to ``config.t_end`` recording the empirical mean and energy."""
    if ens.dim != params.dim:
        raise ConfigError(f"ensemble is {ens.dim}-d but params.dim = {params.dim}")
    dt = config.dt
    n_steps = max(0, math.ceil(config.t_end / dt - 1e-9))
    times, means, energies, counts = [], [], [], []
    snapshots = {}
    pending = sorted(config.snapshot_times)

    def record(e: ParticleEnsemble) -> None:
        times.append(e.time)
        means.append(e.mean())
        energies.append(e.energy())
        counts.append(e.n)

    record(ens)
    while pending and pending[0] <= ens.time + 0.5 * dt:
        snapshots[pending.pop(0)] = ens.positions.copy()
    for i in range(1, n_steps + 1):
        h = min(dt, config.t_end - (i - 1) * dt)
        if config.model == "discontinuous":
            ens = em_step_discontinuous(ens, params, kernel, h)
        else:
            ens = em_step_surrogate(ens, params, h)
        ens.time = config.t_end if i == n_steps else i * dt
        if not np.all(np.isfinite(ens.positions)):
            raise FloatingPointError(f"non-finite particle positions after step {i}")
        if i % config.record_every == 0 or i == n_steps:
            record(ens)
        while pending and pending[0] <= ens.time + 0.5 * dt:
            snapshots[pending.pop(0)] = ens.positions.copy()
    rec = Trajectory(
        times=np.array(times),
        mean=np.array(means),
        energy=np.array(energies),
        mass=np.array(counts, dtype=float),
        snapshots=snapshots,
        meta={"model": config.model, "dt": dt, "kernel": kernel.name, "n": ens.n, "seed": ens.seed},
    )
    return ParticleRun(ens, rec, n_steps)


def histogram(positions, lo: float, hi: float, bins: int, dim: int | None = None) -> GridField:
    """Density estimate ``count / (N * cell volume)`` on ``bins`` equal cells per axis.

    Nodes of the returned field sit at the bin centres.  Particles outside
    ``[lo, hi]^d`` are not binned; their count is ``meta["overflow"]``.
    """
    if bins < 1:
        raise ConfigError("need at least one bin")
    if lo >= hi:
        raise ConfigError(f"histogram needs lo < hi, got [{lo}, {hi}]")
    if isinstance(positions, ParticleEnsemble):
        positions = positions.positions
    x = np.asarray(positions, dtype=float)
    if dim is not None:
        x = as_points(x, dim).reshape(-1, dim)
    n, d = x.shape
    edges = np.linspace(lo, hi, bins + 1)
    inside = np.all((x >= lo) & (x <= hi), axis=1)
    counts, _ = np.histogramdd(x[inside], bins=[edges] * d)
    width = (hi - lo) / bins
    field_ = GridField(counts / (n * width**d), (lo + 0.5 * width,) * d, width)
    field_.meta["overflow"] = int(n - inside.sum())
    field_.meta["count"] = int(n)
    return field_


def histogram_on_grid(positions, grid: GridField) -> GridField:
    """Histogram with one cell centred on each node of ``grid``."""
    half = 0.5 * grid.dx
    nx = grid.shape[0]
    if any(lo != grid.lo[0] for lo in grid.lo) or len(set(grid.shape)) != 1:
        raise ConfigError("histogram_on_grid needs a square grid with equal bounds per axis")
    h = histogram(positions, grid.lo[0] - half, grid.hi[0] + half, nx)
    return GridField(h.values, grid.lo, grid.dx, h.meta)
