"""Named initial conditions and the packaged figure presets."""

from __future__ import annotations

import math
from importlib import resources

import numpy as np

from ..grid import GridField
from ..model_core import ConfigError, as_points
from ..particle_sim import MixtureComponent, ParticleEnsemble, sample_initial_mixture


def _two_bumps(var: float) -> list[MixtureComponent]:
    return [MixtureComponent(0.75, (-2.0,), var), MixtureComponent(0.25, (2.0,), var)]


# each entry: (dimension, default variance, builder)
INITIAL_PRESETS = {
    "f0_test1": (1, 0.1, _two_bumps),
    "f0_test21": (1, 0.05, _two_bumps),
    "init2D": (
        2,
        0.2,
        lambda v: [
            MixtureComponent(3 / 8, (1.0, -1.0), v),
            MixtureComponent(3 / 8, (-1.0, 1.0), v),
            MixtureComponent(1 / 8, (1.0, 1.0), v),
            MixtureComponent(1 / 8, (-1.0, -1.0), v),
        ],
    ),
    "f0_test2": (2, 0.05, lambda v: [MixtureComponent(0.75, (2.0, -2.0), v), MixtureComponent(0.25, (2.0, 2.0), v)]),
}


def preset_components(name: str, var: float | None = None) -> list[MixtureComponent]:
    if name not in INITIAL_PRESETS:
        raise ConfigError(f"unknown initial preset {name!r}; valid: {', '.join(INITIAL_PRESETS)}")
    _, default_var, build = INITIAL_PRESETS[name]
    return build(default_var if var is None else var)


def preset_dim(name: str) -> int:
    return INITIAL_PRESETS[name][0]


def mixture_density(components, x) -> np.ndarray:
    """Density of an isotropic Gaussian mixture at points ``x``."""
    comps = list(components)
    dim = len(comps[0].mean)
    pts = as_points(x, dim)
    out = np.zeros(pts.shape[:-1])
    for c in comps:
        r2 = np.sum((pts - np.asarray(c.mean)) ** 2, axis=-1)
        out += c.weight * np.exp(-r2 / (2 * c.var)) / (2 * math.pi * c.var) ** (dim / 2)
    return out


def mixture_field(components, lo: float, hi: float, nx: int) -> GridField:
    """Mixture sampled at the nodes and rescaled to unit discrete mass."""
    comps = list(components)
    return GridField.from_function(lambda p: mixture_density(comps, p), lo, hi, nx, len(comps[0].mean), normalize=True)


def mixture_particles(components, n: int, seed: int) -> ParticleEnsemble:
    return sample_initial_mixture(components, n, seed)


def figure_presets() -> list[str]:
    files = resources.files(__package__).joinpath("presets")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".yaml"))


def figure_preset_text(name: str) -> str:
    path = resources.files(__package__).joinpath("presets", f"{name}.yaml")
    if not path.is_file():
        raise ConfigError(f"no packaged preset {name!r}; available: {', '.join(figure_presets())}")
    return path.read_text()
