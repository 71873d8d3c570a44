"""Acceptance criteria 1-10, one test per criterion at the stated tolerances.

Each test prints a ``C<n> PASS|FAIL`` line; the same lines are repeated in
the terminal summary.  Run alone with ``pytest tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest

from swarmkin.diagnostics import (
    DecaySeries,
    decay_rate_fit,
    l1_distance,
    marginal,
    moment_report,
    relative_entropy,
    restrict,
)
from swarmkin.equilibrium import EquilibriumProfile, solve_constants_1d, solve_constants_2d, system1_residuals, system2_residuals
from swarmkin.fp_solver import FpConfig, solve
from swarmkin.grid import GridField
from swarmkin.model_core import InteractionKernel, ModelParams, TargetDomain, indicator_complement, kappa_eval, kernel_eval, mean_exact
from swarmkin.cli_io.presets import mixture_field, mixture_particles, preset_components
from swarmkin.particle_sim import MODELS, SdeConfig, histogram_on_grid, run

RESULTS = {}
UNIFORM = InteractionKernel("uniform")
CS = InteractionKernel("cucker_smale", 1.0)


def report(n, ok, detail):
    line = f"C{n} {'PASS' if ok else 'FAIL'}: {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def test_c1_equilibrium_residuals():
    t0 = time.perf_counter()
    m1, s2 = solve_constants_1d(0.8, 0.5)
    r1 = max(map(abs, system1_residuals(m1, 0.8, s2, 0.5)))
    m1b, s2b = solve_constants_2d(0.8, 1.0)
    r2 = max(map(abs, system2_residuals(m1b, 0.8, s2b, 1.0)))
    elapsed = time.perf_counter() - t0
    ok = r1 <= 1e-10 and r2 <= 1e-10 and abs(s2b - 0.125) <= 1e-6 and abs(m1b - 10.9196) <= 1e-4 and elapsed < 1.0
    # m1 = 0.2 e^4 = 10.91963..., so the stated 1e-6 applies to the closed form itself
    ok = ok and abs(m1b - 0.2 * math.exp(4.0)) <= 1e-6
    report(1, ok, f"1D residual {r1:.1e}, 2D residual {r2:.1e}, sigma2={s2b}, m1={m1b:.6f}, {elapsed * 1e3:.1f} ms")


def test_c2_steady_state_fixed_point():
    t0 = time.perf_counter()
    prof = EquilibriumProfile.from_inner_mass(0.8, 0.5)
    f0 = GridField.from_function(prof, -5, 5, 101, 1, normalize=True)
    p = ModelParams(0.2, 0.8, prof.sigma2, 0.5)
    res = solve(f0, FpConfig(equation="discontinuous", t_end=10.0, record_every=10**9), p, UNIFORM)
    d = l1_distance(res.field, f0)
    elapsed = time.perf_counter() - t0
    report(2, d <= 1e-6 and elapsed < 10, f"L1 change after t=10: {d:.2e} ({res.steps} steps, {elapsed:.1f} s)")


def test_c3_mass_and_count_conservation():
    worst = 0.0
    runs = 0
    comps1 = preset_components("f0_test1")
    f1 = mixture_field(comps1, -5, 5, 81)
    p1 = ModelParams(0.2, 0.8, 0.2, 0.5)
    cases = [(eq, k, "rk4") for eq in ("discontinuous", "surrogate", "nonlocal") for k in (UNIFORM, CS)]
    cases.append(("surrogate", UNIFORM, "splitting"))
    for eq, k, integ in cases:
        res = solve(f1, FpConfig(equation=eq, integrator=integ, t_end=1.0, record_every=20), p1, k)
        worst = max(worst, float(np.max(np.abs(res.record.mass - 1.0))))
        runs += 1
    comps2 = preset_components("init2D")
    f2 = mixture_field(comps2, -5, 5, 31)
    p2 = ModelParams(0.2, 0.8, 0.2, 1.0, dim=2)
    for eq in ("discontinuous", "surrogate"):
        for k in (UNIFORM, CS):
            res = solve(f2, FpConfig(equation=eq, t_end=0.5, record_every=20), p2, k)
            worst = max(worst, float(np.max(np.abs(res.record.mass - 1.0))))
            runs += 1
    counts_ok = True
    for comps, p in ((comps1, p1), (comps2, p2)):
        ens = mixture_particles(comps, 2000, 7)
        for model in MODELS:
            pr = run(ens, p, CS, SdeConfig(dt=0.01, t_end=1.0, model=model))
            counts_ok &= bool(np.all(pr.record.mass == 2000)) and pr.ensemble.n == 2000
    report(3, worst <= 1e-10 and counts_ok, f"{runs} PDE runs, max |mass-1| = {worst:.1e}; particle counts exact: {counts_ok}")


def test_c4_mean_law():
    comps = preset_components("f0_test1")
    f0 = mixture_field(comps, -5, 5, 201)
    pde_dev = {}
    part_ok = True
    part_excess = []
    for lam in (0.2, 0.8):
        p = ModelParams(lam, 1 - lam, 0.2, 0.5)
        res = solve(f0, FpConfig(equation="surrogate", t_end=10.0, record_every=50), p)
        pde_dev[lam] = moment_report(res.record, p).max_mean_deviation
        n, dt = 10**5, 1e-2
        pr = run(mixture_particles(comps, n, 1), p, UNIFORM, SdeConfig(dt=dt, t_end=10.0, model="surrogate", record_every=10, snapshot_times=tuple(np.arange(0, 10.01, 0.5))))
        times = np.array(sorted(pr.record.snapshots))
        u0 = pr.record.mean[0]
        for t in times:
            x = pr.record.snapshots[t]
            dev = abs(x.mean() - float(mean_exact(p, u0, t)[0]))
            tol = 3 * x.std() / math.sqrt(n) + 2 * dt
            part_excess.append(dev / tol)
            part_ok &= dev <= tol
    ok = max(pde_dev.values()) <= 1e-3 and part_ok
    pde = ", ".join(f"lam={k}: {v:.2e}" for k, v in pde_dev.items())
    report(4, ok, f"PDE max mean deviation {pde}; particle deviation / tolerance max {max(part_excess):.2f}")


def test_c5_test1a_histograms():
    prof = EquilibriumProfile.from_inner_mass(0.8, 0.5)
    p = ModelParams(0.2, 0.8, prof.sigma2, 0.5)
    grid = GridField.zeros(-5, 5, 101, 1)
    finf = GridField.from_function(prof, -5, 5, 101, 1)
    comps = preset_components("f0_test1")
    dist = {}
    for n in (10**4, 10**5):
        ens = mixture_particles(comps, n, 1)
        for model in MODELS:
            pr = run(ens, p, UNIFORM, SdeConfig(dt=1e-2, t_end=20.0, model=model, record_every=100))
            dist[model, n] = l1_distance(histogram_on_grid(pr.ensemble.positions, grid), finf)
    ok = all(dist[m, 10**5] <= 0.08 and dist[m, 10**5] < dist[m, 10**4] for m in MODELS)
    detail = "; ".join(f"{m}: {dist[m, 10**4]:.4f} -> {dist[m, 10**5]:.4f}" for m in MODELS)
    report(5, ok, f"L1 to f_infty at t=20, N=1e4 -> 1e5: {detail}")


def test_c6_entropy_decay_uniform():
    t0 = time.perf_counter()
    prof = EquilibriumProfile.from_inner_mass(0.8, 1.0)
    f0 = mixture_field(preset_components("f0_test21"), -5, 5, 81)
    finf = GridField.from_function(prof, -5, 5, 81, 1, normalize=True)
    final, monotone = {}, True
    for lam in (0.2, 0.5, 0.8):
        p = ModelParams(lam, 1 - lam, prof.sigma2, 1.0)
        res = solve(f0, FpConfig(equation="surrogate", t_end=3.0, record_every=1), p, entropy_reference=finf)
        H = res.record.entropy
        monotone &= bool(np.all(np.diff(H[10:]) <= 0))
        final[lam] = H[-1]
    elapsed = time.perf_counter() - t0
    ordered = final[0.8] < final[0.5] < final[0.2]
    values = ", ".join(f"H_{k}(3)={v:.4g}" for k, v in final.items())
    report(6, monotone and ordered and elapsed < 60, f"non-increasing after 10 steps: {monotone}; {values}; {elapsed:.1f} s")


def _reference_entropy_fit(kernel, lam):
    prof = EquilibriumProfile.from_inner_mass(0.8, 1.0)
    p = ModelParams(lam, 1 - lam, prof.sigma2, 1.0)
    comps = preset_components("f0_test21")
    # dx^2/10 on the fine grid means 3.2e6 steps; 2e-4 sits just inside the explicit stability bound
    ref = solve(mixture_field(comps, -5, 5, 801), FpConfig(equation="discontinuous", dt=2e-4, t_end=50.0, record_every=10**9), p, kernel)
    f0 = mixture_field(comps, -5, 5, 81)
    res = solve(f0, FpConfig(equation="discontinuous", t_end=3.0, record_every=10), p, kernel, entropy_reference=restrict(ref.field, f0))
    H = res.record.entropy
    return H, decay_rate_fit(DecaySeries(res.record.times, H), (1.5, 3.0))


@pytest.mark.slow
def test_c7_cucker_smale_reference_entropy():
    H_cs, fit_cs = _reference_entropy_fit(CS, 0.2)
    H_u, fit_u = _reference_entropy_fit(UNIFORM, 0.2)
    # transient: the first 10 recorded points (t <= 0.125)
    monotone = bool(np.all(np.diff(H_cs[10:]) < 0))
    slower = fit_cs.exp_rate < fit_u.exp_rate
    report(7, monotone and slower, f"CS monotone after transient: {monotone}; fitted rate CS {fit_cs.exp_rate:.4f} vs uniform {fit_u.exp_rate:.4f}")


@pytest.mark.slow
def test_c8_2d_cross_validation():
    t0 = time.perf_counter()
    comps = preset_components("init2D")
    f0 = mixture_field(comps, -5, 5, 81)
    p = ModelParams(0.2, 0.8, 0.2, 1.0, dim=2)
    ens = mixture_particles(comps, 10**4, 1)
    dist = {}
    for kernel, eq in ((UNIFORM, "surrogate"), (CS, "discontinuous")):
        pde = solve(f0, FpConfig(equation=eq, t_end=10.0, record_every=10**9), p, kernel)
        pr = run(ens, p, kernel, SdeConfig(dt=1e-2, t_end=10.0, model="discontinuous", record_every=100))
        h = histogram_on_grid(pr.ensemble.positions, pde.field)
        dist[kernel.name] = [l1_distance(marginal(pde.field, ax), marginal(h, ax)) for ax in (0, 1)]
    elapsed = time.perf_counter() - t0
    ok = all(d <= 0.1 for v in dist.values() for d in v) and elapsed <= 600
    detail = "; ".join(f"{k}: {v[0]:.4f}, {v[1]:.4f}" for k, v in dist.items())
    report(8, ok, f"marginal L1 at t=10 {detail} ({elapsed:.0f} s)")


def test_c9_splitting_consistency():
    p = ModelParams(0.2, 0.8, 0.2, 0.5)
    f0 = mixture_field(preset_components("f0_test1"), -5, 5, 101)
    dts = (4e-3, 2e-3, 1e-3)
    diffs = []
    for dt in dts:
        a = solve(f0, FpConfig(equation="surrogate", integrator="splitting", dt=dt, t_end=3.0, record_every=10**9), p)
        b = solve(f0, FpConfig(equation="surrogate", dt=dt, t_end=3.0, record_every=10**9, center="exact"), p)
        diffs.append(l1_distance(a.field, b.field))
    orders = [math.log2(diffs[k] / diffs[k + 1]) for k in range(2)]
    C = diffs[0] / dts[0]
    ok = all(o >= 1 for o in orders) and all(d <= C * dt * (1 + 1e-12) for d, dt in zip(diffs, dts))
    report(9, ok, f"L1 differences {', '.join(f'{d:.3e}' for d in diffs)}; C={C:.4f}; orders {orders[0]:.3f}, {orders[1]:.3f}")


def test_c10_oracle_micro_tests():
    two = lambda a: GridField(np.array(a), (0.0,), 1.0)
    h2 = relative_entropy(two([0.6, 0.4]), two([0.5, 0.5]))
    # target is the direct sum 0.6 ln 1.2 + 0.4 ln 0.8 = 0.0201355...; 0.020136 is its six-place rounding
    ok_two = abs(h2 - (0.6 * math.log(1.2) + 0.4 * math.log(0.8))) <= 1e-9
    gauss = lambda m: GridField.from_function(lambda x: np.exp(-((x[..., 0] - m) ** 2) / 2.0), -10, 10, 801, 1, normalize=True)
    kl = relative_entropy(gauss(0.5), gauss(0.0))
    ok_kl = abs(kl - 0.125) <= 1e-4
    p = ModelParams(0.5, 0.5, 0.2, 0.5)
    dom = TargetDomain((0.0,), 0.5)
    trivial = [
        kernel_eval(UNIFORM, 1.0, -3.0) == 1.0,
        kernel_eval(CS, 0.4, 0.4) == 1.0,
        kernel_eval(CS, 0.0, 1.0) == 0.5,
        indicator_complement(dom, 0.0) == 0.0,
        indicator_complement(dom, 1.0) == 1.0,
        indicator_complement(dom, 0.5) == 0.0,
        kappa_eval(p, 0.0) == 0.2 + 0.125,
        kappa_eval(p, 1.0) == 0.2,
    ]
    ok_trivial = all(bool(np.all(t)) for t in trivial)
    report(10, ok_two and ok_kl and ok_trivial, f"two-cell H={h2:.10f}, Gaussian KL={kl:.7f} (exact 0.125), trivial cases exact: {ok_trivial}")
