"""YAML experiment configuration: parsing, validation and round-trip writing.

Key list (every block is optional except ``kind`` and ``model``)::

    kind: equilibrium | particles | fp | compare | entropy
    name: free label used in the report
    seed: integer
    output: run directory
    model:     lam (scalar or list to sweep), mu, sigma2 | inner_mass, delta, x0, dim
    kernel:    name (uniform | cucker_smale), gamma
    initial:   preset (f0_test1 | f0_test21 | init2D | f0_test2) with optional var,
               or mixture: [{weight, mean, var}, ...]
    grid:      lo, hi, nx
    fp:        equations, integrator, dt, t_end, record_every, snapshot_times, safety, transport
    particles: models, n (scalar or list), dt, t_end, record_every, snapshot_times, save_positions
    compare:   pairs: [[particle model, equation], ...]
    entropy:   equation, reference (auto | analytic | solution), reference_nx,
               reference_t_end, reference_dt, fit_window, record_every
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..equilibrium import solve_constants_1d, solve_constants_2d, solve_mass_1d, solve_mass_2d
from ..fp_solver import CENTERS, EQUATIONS, INTEGRATORS
from ..model_core import KERNEL_NAMES, ConfigError, InteractionKernel, ModelParams
from ..particle_sim import MODELS, MixtureComponent
from .presets import INITIAL_PRESETS, preset_components

KINDS = ("equilibrium", "particles", "fp", "compare", "entropy")
REFERENCES = ("auto", "analytic", "solution")


class ConfigValidationError(ConfigError):
    """All problems found in a config file, not just the first."""

    def __init__(self, errors: list[str], source: str | None = None):
        self.errors = list(errors)
        self.source = source
        head = f"{source}: " if source else ""
        super().__init__(head + f"{len(self.errors)} configuration error(s):\n" + "\n".join(f"  - {e}" for e in self.errors))


# converters raise ValueError/TypeError with a short reason


def _float(v):
    if isinstance(v, bool):
        raise TypeError("expected a number")
    return float(v)


def _opt_float(v):
    return None if v is None else _float(v)


def _int(v):
    if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
        raise TypeError("expected an integer")
    return int(v)


def _str(v):
    if not isinstance(v, str):
        raise TypeError("expected a string")
    return v


def _opt_str(v):
    return None if v is None else _str(v)


def _bool(v):
    if not isinstance(v, bool):
        raise TypeError("expected true or false")
    return v


def _tuple_of(conv):
    def inner(v):
        if v is None:
            return ()
        items = v if isinstance(v, (list, tuple)) else [v]
        return tuple(conv(x) for x in items)

    return inner


def _window(v):
    if v is None:
        return None
    t = _tuple_of(_float)(v)
    if len(t) != 2:
        raise ValueError("expected [t0, t1]")
    return t


def _pairs(v):
    if v is None:
        return ()
    out = []
    for item in v:
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise ValueError("each pair must be [particle model, equation]")
        out.append((_str(item[0]), _str(item[1])))
    return tuple(out)


def _mixture(v):
    if v is None:
        return ()
    out = []
    for item in v:
        if not isinstance(item, dict) or set(item) != {"weight", "mean", "var"}:
            raise ValueError("each component needs exactly weight, mean, var")
        out.append(MixtureComponent(_float(item["weight"]), _tuple_of(_float)(item["mean"]), _float(item["var"])))
    return tuple(out)


def _f(conv, default):
    return field(default=default, metadata={"conv": conv})


@dataclass(frozen=True)
class ModelBlock:
    lam: tuple[float, ...] = _f(_tuple_of(_float), (0.2,))
    mu: float | None = _f(_opt_float, None)
    sigma2: float | None = _f(_opt_float, None)
    inner_mass: float | None = _f(_opt_float, None)
    delta: float = _f(_float, 0.5)
    x0: tuple[float, ...] = _f(_tuple_of(_float), (0.0,))
    dim: int = _f(_int, 1)

    def constants(self) -> tuple[float, float, float]:
        """Resolved ``(m1, m2, sigma2)``."""
        if self.sigma2 is not None:
            m1, m2 = (solve_mass_1d if self.dim == 1 else solve_mass_2d)(self.sigma2, self.delta)
            return m1, m2, self.sigma2
        m1, s2 = (solve_constants_1d if self.dim == 1 else solve_constants_2d)(self.inner_mass, self.delta)
        return m1, self.inner_mass, s2

    def params(self, lam: float) -> ModelParams:
        x0 = self.x0 * self.dim if len(self.x0) == 1 else self.x0
        return ModelParams(lam, 1.0 - lam, self.constants()[2], self.delta, x0, self.dim)


@dataclass(frozen=True)
class KernelBlock:
    name: str = _f(_str, "uniform")
    gamma: float = _f(_float, 1.0)

    def build(self) -> InteractionKernel:
        return InteractionKernel(self.name, self.gamma)


@dataclass(frozen=True)
class InitialBlock:
    preset: str | None = _f(_opt_str, "f0_test1")
    var: float | None = _f(_opt_float, None)
    mixture: tuple[MixtureComponent, ...] = _f(_mixture, ())

    def components(self) -> list[MixtureComponent]:
        if self.mixture:
            return list(self.mixture)
        return preset_components(self.preset, self.var)


@dataclass(frozen=True)
class GridBlock:
    lo: float = _f(_float, -5.0)
    hi: float = _f(_float, 5.0)
    nx: int = _f(_int, 101)


@dataclass(frozen=True)
class FpBlock:
    equations: tuple[str, ...] = _f(_tuple_of(_str), ("discontinuous",))
    integrator: str = _f(_str, "rk4")
    dt: float | None = _f(_opt_float, None)
    t_end: float = _f(_float, 20.0)
    record_every: int = _f(_int, 100)
    snapshot_times: tuple[float, ...] = _f(_tuple_of(_float), ())
    safety: float = _f(_float, 1.0)
    transport: str = _f(_str, "lattice")
    center: str = _f(_str, "mean")


@dataclass(frozen=True)
class ParticleBlock:
    models: tuple[str, ...] = _f(_tuple_of(_str), ("discontinuous",))
    n: tuple[int, ...] = _f(_tuple_of(_int), (10000,))
    dt: float = _f(_float, 1e-2)
    t_end: float = _f(_float, 20.0)
    record_every: int = _f(_int, 10)
    snapshot_times: tuple[float, ...] = _f(_tuple_of(_float), ())
    save_positions: bool = _f(_bool, False)


@dataclass(frozen=True)
class CompareBlock:
    pairs: tuple[tuple[str, str], ...] = _f(_pairs, ())


@dataclass(frozen=True)
class EntropyBlock:
    equation: str | None = _f(_opt_str, None)
    reference: str = _f(_str, "auto")
    reference_nx: int = _f(_int, 801)
    reference_t_end: float = _f(_float, 50.0)
    reference_dt: float | None = _f(_opt_float, None)
    fit_window: tuple[float, float] | None = _f(_window, None)
    record_every: int = _f(_int, 10)


_BLOCKS = {
    "model": ModelBlock,
    "kernel": KernelBlock,
    "initial": InitialBlock,
    "grid": GridBlock,
    "fp": FpBlock,
    "particles": ParticleBlock,
    "compare": CompareBlock,
    "entropy": EntropyBlock,
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    model: ModelBlock = field(default_factory=ModelBlock)
    kernel: KernelBlock = field(default_factory=KernelBlock)
    initial: InitialBlock = field(default_factory=InitialBlock)
    grid: GridBlock = field(default_factory=GridBlock)
    fp: FpBlock = field(default_factory=FpBlock)
    particles: ParticleBlock = field(default_factory=ParticleBlock)
    compare: CompareBlock = field(default_factory=CompareBlock)
    entropy: EntropyBlock = field(default_factory=EntropyBlock)
    name: str = ""
    seed: int = 0
    output: str = "runs/out"

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "name": self.name, "seed": self.seed, "output": self.output}
        for key in _BLOCKS:
            out[key] = _block_to_dict(getattr(self, key))
        return out

    def comparison_pairs(self) -> list[tuple[str, str]]:
        if self.compare.pairs:
            return list(self.compare.pairs)
        return [(m, m) for m in self.particles.models if m in self.fp.equations]

    def entropy_equation(self) -> str:
        if self.entropy.equation:
            return self.entropy.equation
        return "surrogate" if self.kernel.name == "uniform" else "discontinuous"

    def entropy_reference(self) -> str:
        if self.entropy.reference != "auto":
            return self.entropy.reference
        return "analytic" if self.kernel.name == "uniform" else "solution"


def _plain(v):
    if isinstance(v, MixtureComponent):
        return {"weight": v.weight, "mean": list(v.mean), "var": v.var}
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    return v


def _block_to_dict(block) -> dict:
    return {f.name: _plain(getattr(block, f.name)) for f in dataclasses.fields(block)}


def _build_block(cls, raw, path: str, errors: list[str]):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        errors.append(f"{path}: expected a mapping, got {type(raw).__name__}")
        return cls()
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        if key not in known:
            errors.append(f"{path}.{key}: unknown key; valid keys: {', '.join(known)}")
            continue
        try:
            kwargs[key] = known[key].metadata["conv"](value)
        except (TypeError, ValueError) as exc:
            errors.append(f"{path}.{key}: {exc} (got {value!r})")
    return cls(**kwargs)


def _in_range(x, lo, hi, closed=True):
    return x is not None and math.isfinite(x) and ((lo <= x <= hi) if closed else (lo < x < hi))


def validation_errors(cfg: ExperimentConfig) -> list[str]:
    errs = []
    if cfg.kind not in KINDS:
        errs.append(f"kind: unknown experiment kind {cfg.kind!r}; valid: {', '.join(KINDS)}")
    m = cfg.model
    if m.dim not in (1, 2):
        errs.append(f"model.dim: must be 1 or 2, got {m.dim}")
    if not m.lam:
        errs.append("model.lam: at least one value required")
    for lam in m.lam:
        if not _in_range(lam, 0.0, 1.0):
            errs.append(f"model.lam: lambda must lie in [0, 1], got {lam}")
    if m.mu is not None:
        if len(m.lam) != 1:
            errs.append("model.mu: give mu only with a single lambda (mu = 1 - lambda otherwise)")
        elif abs(m.lam[0] + m.mu - 1.0) > 1e-12:
            errs.append(f"model.mu: lambda + mu must equal 1, got {m.lam[0]} + {m.mu} = {m.lam[0] + m.mu!r}")
    if (m.sigma2 is None) == (m.inner_mass is None):
        errs.append("model: give exactly one of sigma2 or inner_mass")
    if m.sigma2 is not None and not m.sigma2 > 0:
        errs.append(f"model.sigma2: must be positive, got {m.sigma2}")
    if m.inner_mass is not None and not _in_range(m.inner_mass, 0.0, 1.0, closed=False):
        errs.append(f"model.inner_mass: must lie in (0, 1), got {m.inner_mass}")
    if not m.delta > 0:
        errs.append(f"model.delta: must be positive, got {m.delta}")
    if len(m.x0) not in (1, m.dim):
        errs.append(f"model.x0: expected {m.dim} coordinates, got {len(m.x0)}")

    if cfg.kernel.name not in KERNEL_NAMES:
        errs.append(f"kernel.name: unknown kernel {cfg.kernel.name!r}; valid names: {', '.join(KERNEL_NAMES)}")
    if not cfg.kernel.gamma > 0:
        errs.append(f"kernel.gamma: must be positive, got {cfg.kernel.gamma}")

    ini = cfg.initial
    if ini.mixture:
        wsum = sum(c.weight for c in ini.mixture)
        if any(c.weight <= 0 for c in ini.mixture) or abs(wsum - 1.0) > 1e-12:
            errs.append(f"initial.mixture: weights must be positive and sum to 1, got sum {wsum!r}")
        for c in ini.mixture:
            if len(c.mean) != m.dim:
                errs.append(f"initial.mixture: mean {list(c.mean)} does not have {m.dim} coordinates")
            if not c.var > 0:
                errs.append(f"initial.mixture: variance must be positive, got {c.var}")
    elif ini.preset is None:
        errs.append("initial: give a preset or a mixture")
    elif ini.preset not in INITIAL_PRESETS:
        errs.append(f"initial.preset: unknown preset {ini.preset!r}; valid: {', '.join(INITIAL_PRESETS)}")
    elif INITIAL_PRESETS[ini.preset][0] != m.dim:
        errs.append(f"initial.preset: {ini.preset} is {INITIAL_PRESETS[ini.preset][0]}-d but model.dim = {m.dim}")
    if ini.var is not None and not ini.var > 0:
        errs.append(f"initial.var: must be positive, got {ini.var}")

    g = cfg.grid
    if not g.lo < g.hi:
        errs.append(f"grid: need lo < hi, got [{g.lo}, {g.hi}]")
    if g.nx < 3:
        errs.append(f"grid.nx: need at least 3 nodes, got {g.nx}")

    fp = cfg.fp
    for eq in fp.equations:
        if eq not in EQUATIONS:
            errs.append(f"fp.equations: unknown equation {eq!r}; valid: {', '.join(EQUATIONS)}")
    if fp.integrator not in INTEGRATORS:
        errs.append(f"fp.integrator: unknown integrator {fp.integrator!r}; valid: {', '.join(INTEGRATORS)}")
    if fp.integrator == "splitting" and (cfg.kernel.name != "uniform" or set(fp.equations) - {"surrogate"}):
        errs.append("fp.integrator: splitting needs the uniform kernel and the surrogate equation only")
    if fp.dt is not None and not fp.dt > 0:
        errs.append(f"fp.dt: must be positive, got {fp.dt}")
    if not fp.t_end >= 0:
        errs.append(f"fp.t_end: must be nonnegative, got {fp.t_end}")
    if fp.record_every < 1:
        errs.append("fp.record_every: must be >= 1")
    if not (0 < fp.safety <= 1):
        errs.append(f"fp.safety: must lie in (0, 1], got {fp.safety}")
    if fp.transport not in ("lattice", "interpolate"):
        errs.append(f"fp.transport: unknown transport {fp.transport!r}; valid: lattice, interpolate")
    if fp.center not in CENTERS:
        errs.append(f"fp.center: unknown centre rule {fp.center!r}; valid: {', '.join(CENTERS)}")
    elif fp.center == "exact" and ("discontinuous" in fp.equations or cfg.kernel.name != "uniform"):
        errs.append("fp.center: 'exact' needs the uniform kernel and no discontinuous equation")

    pb = cfg.particles
    for mdl in pb.models:
        if mdl not in MODELS:
            errs.append(f"particles.models: unknown particle model {mdl!r}; valid: {', '.join(MODELS)}")
    if any(n < 1 for n in pb.n) or not pb.n:
        errs.append(f"particles.n: need at least one particle count >= 1, got {list(pb.n)}")
    if not pb.dt > 0:
        errs.append(f"particles.dt: must be positive, got {pb.dt}")
    if not pb.t_end >= 0:
        errs.append(f"particles.t_end: must be nonnegative, got {pb.t_end}")
    if pb.record_every < 1:
        errs.append("particles.record_every: must be >= 1")

    if cfg.kind == "compare":
        for mdl, eq in cfg.comparison_pairs():
            if mdl not in pb.models or eq not in fp.equations:
                errs.append(f"compare.pairs: ({mdl}, {eq}) refers to a model or equation that is not run")
        if not cfg.comparison_pairs():
            errs.append("compare.pairs: no particle model matches an equation; list pairs explicitly")

    en = cfg.entropy
    if en.reference not in REFERENCES:
        errs.append(f"entropy.reference: unknown reference {en.reference!r}; valid: {', '.join(REFERENCES)}")
    if en.equation is not None and en.equation not in EQUATIONS:
        errs.append(f"entropy.equation: unknown equation {en.equation!r}; valid: {', '.join(EQUATIONS)}")
    if cfg.kind == "entropy" and cfg.entropy_reference() == "analytic" and cfg.kernel.name != "uniform":
        errs.append("entropy.reference: no analytic steady state for a non-uniform kernel; use solution")
    if en.reference_nx < 3:
        errs.append(f"entropy.reference_nx: need at least 3 nodes, got {en.reference_nx}")
    if en.reference_dt is not None and not en.reference_dt > 0:
        errs.append(f"entropy.reference_dt: must be positive, got {en.reference_dt}")
    if en.fit_window is not None and not en.fit_window[0] < en.fit_window[1]:
        errs.append(f"entropy.fit_window: need t0 < t1, got {list(en.fit_window)}")
    if en.record_every < 1:
        errs.append("entropy.record_every: must be >= 1")

    if not errs:
        # constants must be solvable before any compute starts
        try:
            m.constants()
        except (ConfigError, RuntimeError) as exc:
            errs.append(f"model: {exc}")
    return errs


def config_from_dict(raw, source: str | None = None) -> ExperimentConfig:
    errors: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigValidationError(["top level: expected a mapping of sections"], source)
    top = {"kind", "name", "seed", "output", *_BLOCKS}
    for key in raw:
        if key not in top:
            errors.append(f"{key}: unknown key; valid keys: {', '.join(sorted(top))}")
    kind = raw.get("kind")
    if kind is None:
        errors.append(f"kind: missing; valid: {', '.join(KINDS)}")
        kind = ""
    kwargs = {"kind": str(kind)}
    for key, conv in (("name", _str), ("seed", _int), ("output", _str)):
        if key in raw:
            try:
                kwargs[key] = conv(raw[key])
            except (TypeError, ValueError) as exc:
                errors.append(f"{key}: {exc} (got {raw[key]!r})")
    for key, cls in _BLOCKS.items():
        kwargs[key] = _build_block(cls, raw.get(key), key, errors)
    cfg = ExperimentConfig(**kwargs)
    errors.extend(validation_errors(cfg))
    if errors:
        raise ConfigValidationError(errors, source)
    return cfg


def parse_config(text: str, source: str | None = None) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark is not None else ""
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigValidationError([f"{where}YAML parse error: {problem}"], source) from None
    return config_from_dict(raw, source)


def load_config(path) -> ExperimentConfig:
    """Read and validate a config file; a bare preset name loads the packaged preset."""
    p = Path(path)
    if p.is_file():
        return parse_config(p.read_text(), str(p))
    from .presets import figure_preset_text, figure_presets

    if str(path) in figure_presets():
        return parse_config(figure_preset_text(str(path)), f"preset:{path}")
    raise ConfigError(f"config file not found: {path}")


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None)


def write_config(cfg: ExperimentConfig, path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(dump_config(cfg))
    return p
