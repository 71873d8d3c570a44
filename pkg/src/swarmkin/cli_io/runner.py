"""Experiment orchestration: run a validated config and write its artifacts."""

from __future__ import annotations

import datetime
import logging
import platform
import runpy
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..diagnostics import DecaySeries, decay_rate_fit, l1_distance, marginal, moment_report, restrict
from ..equilibrium import EquilibriumProfile
from ..fp_solver import FpConfig, solve
from ..grid import GridField
from ..model_core import mean_exact
from ..particle_sim import SdeConfig, histogram_on_grid, run
from . import csvio
from .config import ExperimentConfig, dump_config
from .plotting import emit_plot_script
from .presets import mixture_field, mixture_particles

log = logging.getLogger("swarmkin")


@dataclass
class Artifact:
    path: str
    role: str
    label: str = ""
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"path": self.path, "role": self.role, "label": self.label, **({"meta": self.meta} if self.meta else {})}


class Manifest:
    """Files written by a run, relative to the run directory."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.entries: list[Artifact] = []

    def add(self, path, role: str, label: str = "", **meta) -> Path:
        rel = Path(path).resolve().relative_to(self.root.resolve())
        self.entries.append(Artifact(rel.as_posix(), role, label, meta))
        return Path(path)

    def paths(self) -> list[str]:
        return [a.path for a in self.entries]

    def by_role(self, role: str) -> list[Artifact]:
        return [a for a in self.entries if a.role == role]


@dataclass
class RunResult:
    status: int
    out_dir: Path
    manifest: Manifest
    summary: dict


def _tag(x: float) -> str:
    return f"{x:g}"


def _steady_state(cfg: ExperimentConfig) -> EquilibriumProfile:
    m = cfg.model
    m1, m2, s2 = m.constants()
    x0 = m.x0 * m.dim if len(m.x0) == 1 else m.x0
    return EquilibriumProfile(m1, m2, s2, m.delta, x0, m.dim)


def _finfty_field(cfg: ExperimentConfig, nx: int | None = None, normalize: bool = True) -> GridField:
    g = cfg.grid
    prof = _steady_state(cfg)
    return GridField.from_function(prof, g.lo, g.hi, nx or g.nx, cfg.model.dim, normalize=normalize)


def _snapshot_times(times, t_end: float) -> tuple[float, ...]:
    return tuple(sorted(set(float(t) for t in times if t <= t_end + 1e-12) | {float(t_end)}))


def _fp_label(eq: str, lam: float) -> str:
    return f"fp_{eq}_lam{_tag(lam)}"


def _particle_label(model: str, n: int, lam: float) -> str:
    return f"particles_{model}_N{n}_lam{_tag(lam)}"


# ----------------------------------------------------------------- kinds


def _run_equilibrium(cfg, out: Path, man: Manifest, summary: dict) -> None:
    prof = _steady_state(cfg)
    r = prof.residuals()
    print(f"m1 = {prof.m1!r}\nm2 = {prof.m2!r}\nsigma2 = {prof.sigma2!r}")
    summary["equilibrium"] = {
        "m1": prof.m1,
        "m2": prof.m2,
        "sigma2": prof.sigma2,
        "delta": prof.delta,
        "dim": prof.dim,
        "residuals": [float(r[0]), float(r[1])],
    }
    man.add(
        csvio.write_rows(out / "constants.csv", ["m1", "m2", "sigma2", "delta", "dim"], [[prof.m1, prof.m2, prof.sigma2, prof.delta, prof.dim]]),
        "table",
        "constants",
    )
    f = _finfty_field(cfg, normalize=False)
    man.add(csvio.write_field(out / "f_infty.csv", f), "reference_density", "f_infty", dim=prof.dim)


def _fp_runs(cfg, out: Path, man: Manifest, summary: dict, snapshot_times) -> dict:
    """Solve every (lambda, equation) pair; returns the snapshot dicts."""
    kernel = cfg.kernel.build()
    comps = cfg.initial.components()
    f0 = mixture_field(comps, cfg.grid.lo, cfg.grid.hi, cfg.grid.nx)
    ref = _finfty_field(cfg) if kernel.is_uniform else None
    results = {}
    for lam in cfg.model.lam:
        params = cfg.model.params(lam)
        for eq in cfg.fp.equations:
            fc = FpConfig(
                equation=eq,
                integrator=cfg.fp.integrator,
                dt=cfg.fp.dt,
                t_end=cfg.fp.t_end,
                record_every=cfg.fp.record_every,
                snapshot_times=_snapshot_times(snapshot_times, cfg.fp.t_end),
                safety=cfg.fp.safety,
                transport=cfg.fp.transport,
                center=cfg.fp.center,
            )
            label = _fp_label(eq, lam)
            log.info("solving %s", label)
            res = solve(f0, fc, params, kernel, entropy_reference=ref)
            man.add(csvio.write_timeseries(out / f"{label}_series.csv", res.record), "timeseries", label, lam=lam, equation=eq)
            man.add(csvio.write_snapshots(out / f"{label}_snapshots.csv", res.record.snapshots), "density", label, lam=lam, dim=params.dim)
            u0 = res.record.mean[0]
            exact = mean_exact(params, u0, res.record.times)
            man.add(csvio.write_array(out / f"{label}_mean_exact.csv", ["t", *[f"u{k + 1}" for k in range(params.dim)]], np.column_stack([res.record.times, exact])), "mean_exact", label, lam=lam)
            rep = moment_report(res.record, params, discontinuous=eq == "discontinuous", kernel=kernel)
            entry = {
                "steps": res.steps,
                "dt": float(res.record.meta["dt"]),
                "courant": float(res.courant),
                "max_mass_error": float(np.max(np.abs(res.record.mass - res.record.mass[0]))),
                "max_mean_deviation": rep.max_mean_deviation,
                "energy_bound_ok": rep.energy_ok,
            }
            if ref is not None:
                entry["l1_to_f_infty"] = l1_distance(res.field, ref)
            summary.setdefault("fp", {})[label] = entry
            results[(lam, eq)] = res.record.snapshots
    if ref is not None:
        man.add(csvio.write_field(out / "f_infty.csv", ref), "reference_density", "f_infty", dim=cfg.model.dim)
    return results


def _particle_runs(cfg, out: Path, man: Manifest, summary: dict, snapshot_times) -> dict:
    kernel = cfg.kernel.build()
    comps = cfg.initial.components()
    grid = GridField.zeros(cfg.grid.lo, cfg.grid.hi, cfg.grid.nx, cfg.model.dim)
    ref = _finfty_field(cfg) if kernel.is_uniform else None
    pb = cfg.particles
    snaps = _snapshot_times(snapshot_times, pb.t_end)
    results = {}
    for lam in cfg.model.lam:
        params = cfg.model.params(lam)
        for model in pb.models:
            for n in pb.n:
                label = _particle_label(model, n, lam)
                log.info("simulating %s", label)
                ens = mixture_particles(comps, n, cfg.seed)
                pr = run(ens, params, kernel, SdeConfig(pb.dt, pb.t_end, model, pb.record_every, snaps))
                man.add(csvio.write_trajectory(out / f"{label}_trajectory.csv", pr.record), "trajectory", label, lam=lam, model=model, n=n)
                hists = {t: histogram_on_grid(x, grid) for t, x in pr.record.snapshots.items()}
                man.add(csvio.write_snapshots(out / f"{label}_hist.csv", hists), "histogram", label, lam=lam, dim=params.dim)
                if pb.save_positions:
                    for t, x in pr.record.snapshots.items():
                        man.add(csvio.write_positions(out / f"{label}_positions_t{_tag(t)}.csv", x), "positions", label, t=t)
                rep = moment_report(pr.record, params, discontinuous=model == "discontinuous", kernel=kernel)
                entry = {
                    "steps": pr.steps,
                    "count_conserved": bool(np.all(pr.record.mass == n)),
                    "max_mean_deviation": rep.max_mean_deviation,
                    "overflow_final": int(hists[max(hists)].meta["overflow"]),
                }
                if ref is not None:
                    ts = sorted(hists)
                    d = [l1_distance(hists[t], ref) for t in ts]
                    man.add(csvio.write_series(out / f"{label}_l1_f_infty.csv", ts, d), "distance", f"{label} vs f_infty", lam=lam)
                    entry["l1_to_f_infty"] = d[-1]
                summary.setdefault("particles", {})[label] = entry
                results[(lam, model, n)] = hists
    if ref is not None and not man.by_role("reference_density"):
        man.add(csvio.write_field(out / "f_infty.csv", ref), "reference_density", "f_infty", dim=cfg.model.dim)
    return results


def _run_compare(cfg, out: Path, man: Manifest, summary: dict) -> None:
    times = sorted(set(cfg.fp.snapshot_times) | set(cfg.particles.snapshot_times))
    fields = _fp_runs(cfg, out, man, summary, times)
    hists = _particle_runs(cfg, out, man, summary, times)
    for lam in cfg.model.lam:
        for model, eq in cfg.comparison_pairs():
            for n in cfg.particles.n:
                pde, hist = fields[(lam, eq)], hists[(lam, model, n)]
                ts = [t for t in sorted(hist) if t in pde]
                total = [l1_distance(hist[t], pde[t]) for t in ts]
                extra = {}
                if cfg.model.dim > 1:
                    for ax in range(cfg.model.dim):
                        extra[f"x{ax + 1}_marginal"] = np.array([l1_distance(marginal(hist[t], ax), marginal(pde[t], ax)) for t in ts])
                label = f"l1_{model}_N{n}_vs_{eq}_lam{_tag(lam)}"
                man.add(csvio.write_series(out / f"{label}.csv", ts, total, extra), "distance", label, lam=lam)
                summary.setdefault("compare", {})[label] = {f"t={_tag(t)}": float(v) for t, v in zip(ts, total)} | {
                    f"{k}@t={_tag(ts[-1])}": float(v[-1]) for k, v in extra.items()
                }


def _entropy_reference(cfg, params, kernel, f0: GridField, eq: str, label: str, out: Path, man: Manifest) -> GridField:
    if cfg.entropy_reference() == "analytic":
        return _finfty_field(cfg)
    en = cfg.entropy
    comps = cfg.initial.components()
    fine0 = mixture_field(comps, cfg.grid.lo, cfg.grid.hi, en.reference_nx)
    fc = FpConfig(equation=eq, dt=en.reference_dt, t_end=en.reference_t_end, record_every=10**9)
    log.info("reference solution for %s on nx=%d up to T=%g", label, en.reference_nx, en.reference_t_end)
    fine = solve(fine0, fc, params, kernel).field
    man.add(csvio.write_field(out / f"{label}_reference.csv", fine), "reference_density", f"{label} reference", dim=params.dim)
    return restrict(fine, f0)


def _run_entropy(cfg, out: Path, man: Manifest, summary: dict) -> None:
    kernel = cfg.kernel.build()
    eq = cfg.entropy_equation()
    f0 = mixture_field(cfg.initial.components(), cfg.grid.lo, cfg.grid.hi, cfg.grid.nx)
    fits = []
    for lam in cfg.model.lam:
        params = cfg.model.params(lam)
        label = f"entropy_lam{_tag(lam)}"
        ref = _entropy_reference(cfg, params, kernel, f0, eq, label, out, man)
        fc = FpConfig(equation=eq, dt=cfg.fp.dt, t_end=cfg.fp.t_end, record_every=cfg.entropy.record_every, safety=cfg.fp.safety)
        log.info("entropy run %s (%s)", label, eq)
        res = solve(f0, fc, params, kernel, entropy_reference=ref)
        series = DecaySeries(res.record.times, res.record.entropy, {"lam": lam, "equation": eq, "nx": cfg.grid.nx})
        man.add(csvio.write_series(out / f"{label}.csv", series.times, series.values), "decay", label, lam=lam)
        fit = decay_rate_fit(series, cfg.entropy.fit_window)
        (out / f"{label}_fit.txt").write_text(f"lambda        = {lam:g}\nequation      = {eq}\n" + fit.report() + "\n")
        man.add(out / f"{label}_fit.txt", "fit", label)
        increments = np.diff(series.values)
        fits.append([lam, fit.power_exponent, fit.power_prefactor, fit.power_residual, fit.exp_rate, fit.exp_prefactor, fit.exp_residual, *fit.window])
        summary.setdefault("entropy", {})[label] = {
            "final": float(series.values[-1]),
            "max_increase": float(increments.max()) if increments.size else 0.0,
            "power_exponent": fit.power_exponent,
            "exp_rate": fit.exp_rate,
        }
    header = ["lam", "power_exponent", "power_prefactor", "power_residual", "exp_rate", "exp_prefactor", "exp_residual", "t0", "t1"]
    man.add(csvio.write_rows(out / "entropy_fits.csv", header, fits), "table", "entropy fits")


_KINDS = {
    "equilibrium": _run_equilibrium,
    "fp": lambda c, o, m, s: _fp_runs(c, o, m, s, c.fp.snapshot_times),
    "particles": lambda c, o, m, s: _particle_runs(c, o, m, s, c.particles.snapshot_times),
    "compare": _run_compare,
    "entropy": _run_entropy,
}


def _version() -> str:
    from .. import __version__

    return __version__


def run_experiment(cfg: ExperimentConfig, out_dir=None, render: bool = True) -> RunResult:
    """Run ``cfg`` and write its artifacts; returns the manifest of written files.

    Everything except ``run.yaml`` (which carries a timestamp) is a function
    of the config and seed only.
    """
    out = Path(out_dir or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    cfg = cfg.replace(output=str(out))
    man = Manifest(out)
    summary: dict = {"kind": cfg.kind, "name": cfg.name, "seed": cfg.seed}
    man.add(_write_text(out / "config.yaml", dump_config(cfg)), "config", "resolved config")

    _KINDS[cfg.kind](cfg, out, man, summary)

    man.add(_write_text(out / "summary.yaml", yaml.safe_dump(_plain(summary), sort_keys=False)), "summary", "summary")
    script = emit_plot_script(man, out / "plot_results.py")
    man.add(script, "plot_script", "plot script")
    if render:
        for png in render_plots(script):
            man.add(png, "figure", png.stem)
    man.add(out / "manifest.yaml", "manifest", "manifest")
    man.add(out / "run.yaml", "metadata", "run metadata")
    _write_text(out / "manifest.yaml", yaml.safe_dump({"reproduce": f"swarmkin {cfg.kind} --config config.yaml --seed {cfg.seed}", "files": [a.to_dict() for a in man.entries]}, sort_keys=False))
    meta = {
        "version": _version(),
        "seed": cfg.seed,
        "kind": cfg.kind,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "argv": list(sys.argv),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        "config": cfg.to_dict(),
    }
    _write_text(out / "run.yaml", yaml.safe_dump(meta, sort_keys=False))
    return RunResult(0, out, man, summary)


def render_plots(script: Path) -> list[Path]:
    """Execute the emitted script in-process with a non-interactive backend."""
    import matplotlib

    matplotlib.use("Agg")
    ns = runpy.run_path(str(script), run_name="swarmkin_plot")
    return [Path(p) for p in ns["main"](str(script.parent))]


def _write_text(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
