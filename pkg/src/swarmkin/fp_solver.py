"""Explicit finite-volume solver for the swarm Fokker-Planck equations.

Three right-hand sides share one flux discretization:

``discontinuous``
    ``div[B[f] 1_{D^c} f + sigma2 grad f]``
``surrogate``
    ``div[(x - xt) f + grad(kappa f)]`` with ``xt = lam*x0 + mu*mean(f)``
``nonlocal``
    ``div[B[f] f + grad(kappa f)]``, kernel-weighted drift, kappa centred at ``xt``

The flux at each interface is the exponentially fitted (Chang-Cooper /
Scharfetter-Gummel) form

    F = D/dx * [Bern(-w) f_{i+1} - Bern(w) f_i],    Bern(z) = z / (e^z - 1)

with ``w`` the cell integral of (advective velocity)/(diffusion).  The
integral is evaluated exactly for the piecewise-linear drift so the flux
vanishes on the sampled steady state.  Boundary fluxes are pinned to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import fft as sp_fft
from scipy.special import exprel

from ._kernels import grid_rate
from .grid import GridField
from .model_core import ConfigError, InteractionKernel, ModelParams, Trajectory, mean_exact, shifted_center

EQUATIONS = ("discontinuous", "surrogate", "nonlocal")
INTEGRATORS = ("rk4", "splitting")
# surrogate centre lam*x0 + mu*u: u from the discrete mean, or from the closed-form mean law
CENTERS = ("mean", "exact")

# 3-point Gauss-Legendre on [-1, 1]
_GL_NODES = np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
_GL_WEIGHTS = np.array([5.0, 8.0, 5.0]) / 9.0


def bernoulli(z):
    """``z / (exp(z) - 1)`` with the removable singularity at 0 filled in."""
    return 1.0 / exprel(np.clip(z, -700.0, 700.0))


def fitting_weight(w):
    """Chang-Cooper interpolation weight ``1/w - 1/(e^w - 1)``; 1/2 at ``w = 0``."""
    w = np.asarray(w, dtype=float)
    small = np.abs(w) < 1e-6
    ws = np.where(small, 1.0, w)
    theta = 1.0 / ws - 1.0 / np.expm1(ws)
    return np.where(small, 0.5 - w / 12.0, theta)


def _lower(a: np.ndarray, axis: int) -> np.ndarray:
    """All but the last entry along ``axis`` (a view)."""
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(None, -1)
    return a[tuple(idx)]


def _upper(a: np.ndarray, axis: int) -> np.ndarray:
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(1, None)
    return a[tuple(idx)]


def _sg_flux(f: np.ndarray, w: np.ndarray, diff: np.ndarray, dx: float, axis: int) -> np.ndarray:
    return diff / dx * (bernoulli(-w) * _upper(f, axis) - bernoulli(w) * _lower(f, axis))


def flux_assemble(values: np.ndarray, drift: np.ndarray, diffusion: np.ndarray, dx: float, axis: int = 0) -> np.ndarray:
    """Interface fluxes along ``axis`` for interface drift ``C`` and diffusion ``D``.

    Equivalent to ``C[(1-theta) f_{i+1} + theta f_i] + D (f_{i+1} - f_i)/dx``
    with ``theta`` from :func:`fitting_weight` at ``w = C dx / D``.
    """
    diffusion = np.asarray(diffusion, dtype=float)
    if np.any(diffusion <= 0):
        raise ValueError("interface diffusion must be positive")
    w = np.asarray(drift, dtype=float) * dx / diffusion
    return _sg_flux(np.asarray(values, dtype=float), w, diffusion, dx, axis)


def divergence(fluxes: list[np.ndarray], dx: float) -> np.ndarray:
    """Node rates from interface fluxes with zero flux through the boundary."""
    out = None
    for axis, F in enumerate(fluxes):
        pad = [(0, 0)] * F.ndim
        pad[axis] = (1, 1)
        term = np.diff(np.pad(F, pad), axis=axis) / dx
        out = term if out is None else out + term
    return out


class _ConvPlan:
    """Cached FFT of the vector kernel ``P(z) z`` on all lattice offsets."""

    def __init__(self, n: int, dim: int, dx: float, gamma: float):
        offs = dx * np.arange(-(n - 1), n)
        mesh = np.meshgrid(*([offs] * dim), indexing="ij")
        weight = (1.0 + sum(m**2 for m in mesh)) ** (-gamma)
        self.n = n
        # circular length 2n-1 already keeps the needed window alias-free
        self.size = tuple([sp_fft.next_fast_len(2 * n - 1, real=True)] * dim)
        self.axes = tuple(range(dim))
        self.spectra = [sp_fft.rfftn(weight * m, self.size, axes=self.axes) for m in mesh]
        self.window = tuple([slice(n - 1, 2 * n - 1)] * dim)

    def __call__(self, values: np.ndarray) -> list[np.ndarray]:
        fv = sp_fft.rfftn(values, self.size, axes=self.axes)
        return [sp_fft.irfftn(fv * s, self.size, axes=self.axes)[self.window] for s in self.spectra]


@lru_cache(maxsize=16)
def _conv_plan(n: int, dim: int, dx: float, gamma: float) -> _ConvPlan:
    return _ConvPlan(n, dim, dx, gamma)


def _drift_nodes(values: np.ndarray, mesh: list[np.ndarray], dx: float, params: ModelParams, kernel: InteractionKernel) -> np.ndarray:
    vol = dx**values.ndim
    mass = values.sum() * vol
    if mass <= 0:
        raise ValueError("field has zero mass")
    out = np.empty((values.ndim,) + values.shape)
    if kernel.is_uniform:
        inters = [xk * mass - (xk * values).sum() * vol for xk in mesh]
    else:
        inters = [c * vol for c in _conv_plan(values.shape[0], values.ndim, dx, kernel.gamma)(values)]
    for k, xk in enumerate(mesh):
        out[k] = params.lam * (xk - params.x0[k]) + params.mu * inters[k]
    return out


def nonlocal_drift_on_grid(field: GridField, kernel: InteractionKernel, params: ModelParams) -> list[np.ndarray]:
    """Drift ``B[f]`` at the interface midpoints along each axis.

    The uniform kernel uses the exact mean rewrite; other kernels use an FFT
    convolution of the node values (midpoint quadrature).
    """
    nodes = _drift_nodes(field.values, field.mesh(), field.dx, params, kernel)
    out = []
    for k in range(field.dim):
        out.append(0.5 * (_lower(nodes[k], k) + _upper(nodes[k], k)))
    return out


class _Operator:
    """Right-hand side ``div F`` for a fixed lattice and equation.

    ``center`` freezes the surrogate centre (used by the splitting step);
    ``center_fn`` prescribes it as a function of time; otherwise it follows
    ``lam*x0 + mu*mean(f)``.
    """

    def __init__(self, grid: GridField, params: ModelParams, kernel: InteractionKernel, equation: str, center=None, center_fn=None):
        if equation not in EQUATIONS:
            raise ConfigError(f"unknown equation {equation!r}; valid: {', '.join(EQUATIONS)}")
        self.params = params
        self.kernel = kernel
        self.equation = equation
        self.frozen_center = None if center is None else np.asarray(center, dtype=float)
        self.center_fn = center_fn
        self.dx = grid.dx
        self.lo = grid.lo
        self.dim = grid.dim
        self.mesh = grid.mesh()
        self.vol = grid.cell_volume
        # per axis: segment start coordinate and the other node coordinates
        self.seg = []
        for k in range(self.dim):
            self.seg.append([_lower(m, k) for m in self.mesh])
        if equation == "discontinuous":
            self._fixed_inside = [self._inside(k, params.center) for k in range(self.dim)]

    def _inside(self, k: int, center: np.ndarray):
        """Overlap ``[p, q]`` of each axis-k segment with the ball around ``center``."""
        coords = self.seg[k]
        perp2 = sum((coords[j] - center[j]) ** 2 for j in range(self.dim) if j != k)
        half = np.sqrt(np.maximum(self.params.delta**2 - perp2, 0.0))
        sa = coords[k]
        p = np.clip(center[k] - half, sa, sa + self.dx)
        q = np.clip(center[k] + half, sa, sa + self.dx)
        q = np.maximum(q, p)
        return p, q, perp2

    def center_of(self, values: np.ndarray, t: float | None = None) -> np.ndarray:
        if self.frozen_center is not None:
            return self.frozen_center
        if self.center_fn is not None and t is not None:
            return np.asarray(self.center_fn(t), dtype=float)
        mass = values.sum() * self.vol
        u = np.array([(m * values).sum() * self.vol for m in self.mesh]) / mass
        return shifted_center(self.params, u)

    def drift_nodes(self, values: np.ndarray, center: np.ndarray) -> np.ndarray:
        if self.equation == "surrogate":
            return np.stack([m - center[k] for k, m in enumerate(self.mesh)])
        return _drift_nodes(values, self.mesh, self.dx, self.params, self.kernel)

    def coefficients(self, values: np.ndarray, t: float | None = None):
        """Fitting exponents ``w`` and interface diffusions ``D`` per axis."""
        p = self.params
        dx = self.dx
        center = None if self.equation == "discontinuous" else self.center_of(values, t)
        bnodes = self.drift_nodes(values, center)
        ws, ds = [], []
        for k in range(self.dim):
            ba = _lower(bnodes[k], k)
            bb = _upper(bnodes[k], k)
            sa = self.seg[k][k]
            slope = (bb - ba) / dx

            def b_at(s):
                return ba + slope * (s - sa)

            total = dx * 0.5 * (ba + bb)
            if self.equation == "discontinuous":
                pin, qin, _ = self._fixed_inside[k]
                inner = (qin - pin) * b_at(0.5 * (pin + qin))
                ws.append((total - inner) / p.sigma2)
                ds.append(np.full_like(total, p.sigma2))
                continue
            pin, qin, perp2 = self._inside(k, center)
            inner = (qin - pin) * b_at(0.5 * (pin + qin))
            w = (total - inner) / p.sigma2
            # inside the kappa ball: (B + d kappa/dx_k)/kappa, zero for the exact linear drift
            half_len = 0.5 * (qin - pin)
            mid = 0.5 * (pin + qin)
            acc = np.zeros_like(w)
            for node, weight in zip(_GL_NODES, _GL_WEIGHTS):
                s = mid + half_len * node
                z = s - center[k]
                kap = p.sigma2 + 0.5 * (p.delta**2 - perp2 - z**2)
                acc += weight * (b_at(s) - z) / np.maximum(kap, p.sigma2)
            w = w + half_len * acc
            zm = sa + 0.5 * dx - center[k]
            r2 = perp2 + zm**2
            dmid = np.where(r2 < p.delta**2, p.sigma2 + 0.5 * (p.delta**2 - r2), p.sigma2)
            ws.append(w)
            ds.append(dmid)
        return ws, ds

    def fluxes(self, values: np.ndarray, t: float | None = None) -> list[np.ndarray]:
        ws, ds = self.coefficients(values, t)
        return [_sg_flux(values, w, d, self.dx, k) for k, (w, d) in enumerate(zip(ws, ds))]

    def rate(self, values: np.ndarray, t: float | None = None) -> np.ndarray:
        center = self.params.center if self.equation == "discontinuous" else self.center_of(values, t)
        bnodes = self.drift_nodes(values, center)
        return grid_rate(values, bnodes, self.lo, self.dx, center, self.params.sigma2, self.params.delta, self.equation != "discontinuous")

    def rate_reference(self, values: np.ndarray, t: float | None = None) -> np.ndarray:
        """Pure-numpy evaluation of :meth:`rate`."""
        return divergence(self.fluxes(values, t), self.dx)

    def max_outflow_rate(self, values: np.ndarray) -> float:
        """Largest diagonal entry of the linearized operator (per unit time)."""
        ws, ds = self.coefficients(values)
        diag = np.zeros(values.shape)
        for k, (w, d) in enumerate(zip(ws, ds)):
            pad = [(0, 0)] * values.ndim
            pad[k] = (0, 1)
            diag += np.pad(d * bernoulli(w), pad) / self.dx**2
            pad[k] = (1, 0)
            diag += np.pad(d * bernoulli(-w), pad) / self.dx**2
        return float(diag.max())


def _rk4(op: _Operator, f: np.ndarray, dt: float, t: float = 0.0) -> np.ndarray:
    k1 = op.rate(f, t)
    k2 = op.rate(f + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = op.rate(f + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = op.rate(f + dt * k3, t + dt)
    return f + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


@dataclass
class FpConfig:
    equation: str = "discontinuous"
    integrator: str = "rk4"
    dt: float | None = None
    t_end: float = 1.0
    record_every: int = 1
    snapshot_times: tuple[float, ...] = ()
    safety: float = 1.0
    transport: str = "lattice"
    center: str = "mean"

    def __post_init__(self):
        errs = []
        if self.equation not in EQUATIONS:
            errs.append(f"unknown equation {self.equation!r}; valid: {', '.join(EQUATIONS)}")
        if self.integrator not in INTEGRATORS:
            errs.append(f"unknown integrator {self.integrator!r}; valid: {', '.join(INTEGRATORS)}")
        if self.dt is not None and not self.dt > 0:
            errs.append(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            errs.append(f"t_end must be nonnegative, got {self.t_end}")
        if self.record_every < 1:
            errs.append("record_every must be >= 1")
        if not (0 < self.safety <= 1):
            errs.append(f"safety factor must lie in (0, 1], got {self.safety}")
        if self.transport not in ("lattice", "interpolate"):
            errs.append(f"unknown transport {self.transport!r}")
        if self.center not in CENTERS:
            errs.append(f"unknown centre rule {self.center!r}; valid: {', '.join(CENTERS)}")
        if self.center == "exact" and self.equation == "discontinuous":
            errs.append("the closed-form centre only applies to the surrogate and nonlocal equations")
        if errs:
            raise ConfigError("; ".join(errs))
        self.snapshot_times = tuple(float(t) for t in self.snapshot_times)

    def time_step(self, dx: float) -> float:
        """Default ``dx^2 / 10`` unless set explicitly."""
        return self.dt if self.dt is not None else dx**2 / 10.0


def check_stability(field: GridField, config: FpConfig, params: ModelParams, kernel: InteractionKernel) -> float:
    """Raise :class:`ConfigError` unless ``dt * max outflow <= safety``; returns that product.

    Under this bound the RK4 stability polynomial is absolutely monotone, so
    node values stay nonnegative for the frozen-coefficient problem.
    """
    op = _Operator(field, params, kernel, config.equation)
    dt = config.time_step(field.dx)
    courant = dt * op.max_outflow_rate(field.values)
    if courant > config.safety:
        raise ConfigError(
            f"time step {dt:g} violates the explicit bound: dt*max_rate = {courant:.3g} > {config.safety:g}"
        )
    return courant


def _center_fn(config: FpConfig, params: ModelParams, kernel: InteractionKernel, u0):
    if config.center != "exact":
        return None
    if not kernel.is_uniform:
        raise ConfigError("the closed-form centre needs the uniform kernel")
    if u0 is None:
        raise ConfigError("the closed-form centre needs the initial mean u0")
    return lambda t: exact_surrogate_center(params, u0, t)


def step(
    field: GridField, config: FpConfig, params: ModelParams, kernel: InteractionKernel, t: float = 0.0, dt: float | None = None, u0=None
) -> GridField:
    """One explicit RK4 step of ``d f/dt = div F`` from time ``t``.

    ``u0`` (the mean at time 0) is required when ``config.center == "exact"``.
    """
    op = _Operator(field, params, kernel, config.equation, center_fn=_center_fn(config, params, kernel, u0))
    h = config.time_step(field.dx) if dt is None else dt
    return field.with_values(_rk4(op, field.values, h, t))


def transport_shift(params: ModelParams, u0, t: float, dt: float) -> np.ndarray:
    """Integral over ``[t, t+dt]`` of the transport velocity ``lam*mu*(u0-x0)e^{-lam s}``."""
    u0 = np.asarray(u0, dtype=float)
    if params.lam == 0.0:
        return np.zeros_like(u0)
    return params.mu * (u0 - params.center) * (math.exp(-params.lam * t) - math.exp(-params.lam * (t + dt)))


def shift_conservative(values: np.ndarray, shift_cells: np.ndarray) -> np.ndarray:
    """Translate node values by ``shift_cells`` per axis with linear interpolation.

    Each node's mass is split between the two receiving nodes, so the sum is
    preserved exactly; mass pushed past the boundary stays in the edge node.
    """
    out = np.asarray(values, dtype=float)
    for axis, s in enumerate(np.atleast_1d(shift_cells)):
        if s == 0.0:
            continue
        n = out.shape[axis]
        m = math.floor(s)
        a = s - m
        res = np.zeros_like(out)
        for off, frac in ((m, 1.0 - a), (m + 1, a)):
            if frac == 0.0:
                continue
            dest = np.clip(np.arange(n) + off, 0, n - 1)
            moved = np.moveaxis(out, axis, 0) * frac
            acc = np.moveaxis(res, axis, 0)
            np.add.at(acc, dest, moved)
        out = res
    return out


def split_step(g: GridField, params: ModelParams, t: float, dt: float, u0, transport: str = "lattice") -> GridField:
    """One Lie splitting step for the uniform-interaction surrogate in the moving frame.

    ``g`` lives in ``z = x - xt(t)``.  First the time-independent drift-diffusion
    ``div[z g + grad(K(z) g)]`` is advanced by one RK4 step, then the transport
    ``g_t + A(t) . grad g = 0`` is solved over ``[t, t+dt]``.  Because ``A`` is
    uniform in space its characteristics are rigid translations: ``"lattice"``
    moves the node lattice by the exact displacement (departure points land on
    the previous nodes), ``"interpolate"`` keeps the lattice and resamples with
    :func:`shift_conservative`.
    """
    frame = replace(params, lam=1.0, mu=0.0, x0=(0.0,) * params.dim)
    op = _Operator(g, frame, InteractionKernel("uniform"), "surrogate", center=np.zeros(params.dim))
    half = _rk4(op, g.values, dt)
    disp = transport_shift(params, u0, t, dt)
    if transport == "lattice":
        return GridField(half, tuple(np.asarray(g.lo) + disp), g.dx, dict(g.meta))
    if transport == "interpolate":
        return GridField(shift_conservative(half, disp / g.dx), g.lo, g.dx, dict(g.meta))
    raise ConfigError(f"unknown transport {transport!r}")


@dataclass
class FpResult:
    field: GridField
    record: Trajectory
    config: FpConfig
    steps: int = 0
    courant: float = 0.0
    extras: dict = field(default_factory=dict)


def _time_grid(t_end: float, dt: float) -> list[float]:
    n = max(0, math.ceil(t_end / dt - 1e-9))
    return [min(dt, t_end - i * dt) for i in range(n)]


def solve(
    initial: GridField,
    config: FpConfig,
    params: ModelParams,
    kernel: InteractionKernel | None = None,
    entropy_reference: GridField | None = None,
) -> FpResult:
    """Integrate to ``config.t_end`` recording mass, mean, energy and (optionally) entropy.

    ``entropy_reference`` is a density on the same grid; when given, the
    relative entropy ``H(f | reference)`` is recorded alongside the moments.
    """
    from .diagnostics import relative_entropy

    kernel = kernel or InteractionKernel("uniform")
    if initial.dim != params.dim:
        raise ConfigError(f"field is {initial.dim}-d but params.dim = {params.dim}")
    splitting = config.integrator == "splitting"
    if splitting and (config.equation != "surrogate" or not kernel.is_uniform):
        raise ConfigError("the splitting integrator only applies to the uniform-interaction surrogate")
    if entropy_reference is not None and not entropy_reference.same_grid(initial):
        raise ConfigError("entropy reference must live on the solver grid")
    dt = config.time_step(initial.dx)
    courant = check_stability(initial, replace(config, dt=dt), params, kernel)

    f = initial.copy()
    u0 = f.mean()
    if splitting:
        xt0 = shifted_center(params, u0)
        state = GridField(f.values, tuple(np.asarray(f.lo) - xt0), f.dx)
    else:
        op = _Operator(f, params, kernel, config.equation, center_fn=_center_fn(config, params, kernel, u0))

    times, masses, means, energies, entropies = [], [], [], [], []
    snapshots = {}
    pending = sorted(config.snapshot_times)

    def current() -> GridField:
        if not splitting:
            return f
        if config.transport == "lattice":
            # the z-lattice moved with the centre, so nodes keep their x positions
            return GridField(state.values, initial.lo, initial.dx)
        # fixed z-lattice: node i sits at x_i + (xt(t) - xt(0)); resample onto the x nodes
        drift = (exact_surrogate_center(params, u0, t) - xt0) / initial.dx
        return GridField(shift_conservative(state.values, drift), initial.lo, initial.dx)

    def record(t: float) -> None:
        cur = current()
        times.append(t)
        masses.append(cur.mass)
        means.append(cur.mean())
        energies.append(cur.energy())
        if entropy_reference is not None:
            entropies.append(relative_entropy(cur, entropy_reference))

    t = 0.0
    record(0.0)
    while pending and pending[0] <= 0.5 * dt:
        snapshots[pending.pop(0)] = current().copy()
    steps = _time_grid(config.t_end, dt)
    for i, h in enumerate(steps, start=1):
        if splitting:
            state = split_step(state, params, t, h, u0, config.transport)
        else:
            f = f.with_values(_rk4(op, f.values, h, t))
        t = config.t_end if i == len(steps) else i * dt
        if not np.all(np.isfinite(current().values)):
            raise FloatingPointError(f"non-finite density after step {i}")
        if i % config.record_every == 0 or i == len(steps):
            record(t)
        while pending and pending[0] <= t + 0.5 * dt:
            snapshots[pending.pop(0)] = current().copy()

    final = current()
    rec = Trajectory(
        times=np.array(times),
        mean=np.array(means),
        energy=np.array(energies),
        mass=np.array(masses),
        entropy=np.array(entropies) if entropy_reference is not None else None,
        snapshots=snapshots,
        meta={"equation": config.equation, "dt": dt, "kernel": kernel.name},
    )
    return FpResult(final, rec, config, steps=len(steps), courant=courant)


def exact_surrogate_center(params: ModelParams, u0, t: float) -> np.ndarray:
    """Centre ``lam*x0 + mu*u(t)`` with the closed-form mean."""
    return shifted_center(params, mean_exact(params, u0, t))
