"""Kinetic and particle models for swarms that cover a target ball uniformly.

The library layers are:

* :mod:`swarmkin.model_core` - parameters, kernels, drift and diffusion;
* :mod:`swarmkin.equilibrium` - steady-state constants and profiles;
* :mod:`swarmkin.particle_sim` - Euler-Maruyama agent simulation;
* :mod:`swarmkin.fp_solver` - exponential-fitting finite-volume solver;
* :mod:`swarmkin.diagnostics` - entropy, distances, moments and decay fits;
* :mod:`swarmkin.cli_io` - configuration, runs and plot scripts.
"""

__version__ = "0.1.0"

from .diagnostics import DecaySeries, decay_rate_fit, l1_distance, moment_report, relative_entropy
from .equilibrium import EquilibriumProfile, solve_constants_1d, solve_constants_2d
from .fp_solver import FpConfig, solve, split_step, step
from .grid import GridField
from .model_core import ConfigError, InteractionKernel, ModelParams, TargetDomain, mean_exact
from .particle_sim import ParticleEnsemble, SdeConfig, run, sample_initial_mixture

__all__ = [
    "ConfigError",
    "DecaySeries",
    "EquilibriumProfile",
    "FpConfig",
    "GridField",
    "InteractionKernel",
    "ModelParams",
    "ParticleEnsemble",
    "SdeConfig",
    "TargetDomain",
    "decay_rate_fit",
    "l1_distance",
    "mean_exact",
    "moment_report",
    "relative_entropy",
    "run",
    "sample_initial_mixture",
    "solve",
    "solve_constants_1d",
    "solve_constants_2d",
    "split_step",
    "step",
]
