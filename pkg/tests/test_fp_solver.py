import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from swarmkin.diagnostics import l1_distance
from swarmkin.equilibrium import EquilibriumProfile
from swarmkin.fp_solver import (
    FpConfig,
    bernoulli,
    check_stability,
    divergence,
    fitting_weight,
    flux_assemble,
    shift_conservative,
    solve,
    split_step,
    step,
    transport_shift,
)
from swarmkin.grid import GridField
from swarmkin.model_core import ConfigError, InteractionKernel, ModelParams


def two_bumps(nx=81, lo=-5.0, hi=5.0):
    f = lambda x: 0.75 * np.exp(-((x[..., 0] + 2) ** 2) / 0.2) + 0.25 * np.exp(-((x[..., 0] - 2) ** 2) / 0.2)
    return GridField.from_function(f, lo, hi, nx, 1, normalize=True)


def test_fitting_weight_limits():
    assert fitting_weight(0.0) == 0.5
    assert fitting_weight(1e-9) == pytest.approx(0.5, abs=1e-9)
    assert fitting_weight(50.0) == pytest.approx(1 / 50.0, rel=1e-12)
    assert fitting_weight(-50.0) == pytest.approx(1 - 1 / 50.0, rel=1e-12)
    assert bernoulli(0.0) == 1.0


def test_flux_reduces_to_central_for_zero_drift():
    f = np.array([1.0, 3.0, 2.0])
    F = flux_assemble(f, np.zeros(2), np.full(2, 0.5), 0.1)
    np.testing.assert_allclose(F, 0.5 * np.diff(f) / 0.1)


def test_flux_matches_theta_form():
    f = np.array([0.2, 0.7, 0.4, 0.1])
    C = np.array([0.3, -1.2, 2.0])
    D = np.array([0.2, 0.5, 0.1])
    dx = 0.25
    th = fitting_weight(C * dx / D)
    expect = C * ((1 - th) * f[1:] + th * f[:-1]) + D * np.diff(f) / dx
    np.testing.assert_allclose(flux_assemble(f, C, D, dx), expect, rtol=1e-12)


def test_flux_vanishes_on_discrete_equilibrium():
    # f_{i+1}/f_i = exp(-C dx / D) is the exact zero-flux ratio
    dx, C, D = 0.1, 1.5, 0.3
    f = np.exp(-C * dx / D * np.arange(6))
    assert np.max(np.abs(flux_assemble(f, np.full(5, C), np.full(5, D), dx))) < 1e-15


def test_divergence_is_conservative():
    F = np.random.default_rng(0).normal(size=9)
    assert divergence([F], 0.1).sum() == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("equation", ["discontinuous", "surrogate"])
def test_steady_state_is_fixed_point(equation):
    prof = EquilibriumProfile.from_inner_mass(0.8, 0.5)
    f0 = GridField.from_function(prof, -5, 5, 101, 1, normalize=True)
    p = ModelParams(0.5, 0.5, prof.sigma2, 0.5)
    res = solve(f0, FpConfig(equation=equation, t_end=1.0, record_every=10**9), p)
    assert l1_distance(res.field, f0) < 1e-12


@pytest.mark.parametrize("equation, kernel", [("discontinuous", "uniform"), ("discontinuous", "cucker_smale"), ("surrogate", "uniform"), ("nonlocal", "cucker_smale")])
def test_mass_and_positivity(equation, kernel):
    p = ModelParams(0.2, 0.8, 0.2, 0.5)
    res = solve(two_bumps(), FpConfig(equation=equation, t_end=0.5, record_every=20), p, InteractionKernel(kernel))
    assert np.max(np.abs(res.record.mass - 1.0)) < 1e-12
    assert res.field.values.min() >= 0.0


@settings(max_examples=15, deadline=None)
@given(arrays(np.float64, 41, elements=st.floats(0.0, 5.0)), st.sampled_from(["discontinuous", "surrogate", "nonlocal"]))
def test_single_step_preserves_sign_and_mass(vals, equation):
    if vals.sum() == 0:
        vals[20] = 1.0
    f = GridField(vals / (vals.sum() * 0.25), (-5.0,), 0.25)
    p = ModelParams(0.3, 0.7, 0.2, 0.5)
    kernel = InteractionKernel("cucker_smale" if equation == "nonlocal" else "uniform")
    out = step(f, FpConfig(equation=equation), p, kernel)
    assert out.values.min() >= -1e-15
    assert out.mass == pytest.approx(f.mass, abs=1e-13)


def test_2d_mass_and_mean_symmetry():
    f = GridField.from_function(lambda x: np.exp(-np.sum((x - 1.0) ** 2, axis=-1) / 0.4), -4, 4, 33, 2, normalize=True)
    p = ModelParams(0.5, 0.5, 0.2, 1.0, dim=2)
    res = solve(f, FpConfig(equation="surrogate", t_end=0.2, record_every=5), p)
    assert np.max(np.abs(res.record.mass - 1.0)) < 1e-12
    m = res.record.mean[-1]
    assert m[0] == pytest.approx(m[1], abs=1e-12)


def test_stability_violation_is_reported():
    p = ModelParams(0.2, 0.8, 0.2, 0.5)
    with pytest.raises(ConfigError, match="explicit bound"):
        check_stability(two_bumps(), FpConfig(dt=0.1), p, InteractionKernel("uniform"))


def test_config_validation():
    with pytest.raises(ConfigError, match="unknown equation"):
        FpConfig(equation="heat")
    with pytest.raises(ConfigError, match="closed-form centre"):
        FpConfig(equation="discontinuous", center="exact")
    with pytest.raises(ConfigError, match="safety"):
        FpConfig(safety=1.5)


def test_splitting_rejected_for_other_equations():
    p = ModelParams(0.2, 0.8, 0.2, 0.5)
    with pytest.raises(ConfigError, match="splitting"):
        solve(two_bumps(), FpConfig(equation="discontinuous", integrator="splitting", t_end=0.1), p)


def test_transport_shift_integrates_velocity():
    p = ModelParams(0.2, 0.8, 0.2, 0.5)
    s = transport_shift(p, [-1.0], 1.0, 0.5)
    assert s[0] == pytest.approx(0.8 * -1.0 * (math.exp(-0.2) - math.exp(-0.3)), rel=1e-14)
    assert transport_shift(ModelParams(0.0, 1.0, 0.2, 0.5), [-1.0], 0.0, 1.0)[0] == 0.0


def test_split_step_without_transport_is_plain_step():
    g = two_bumps()
    frame = ModelParams(1.0, 0.0, 0.2, 0.5)
    # u0 = x0 makes the transport velocity vanish
    split = split_step(g, ModelParams(0.2, 0.8, 0.2, 0.5), 0.0, 1e-3, [0.0])
    plain = step(g, FpConfig(equation="surrogate"), frame, InteractionKernel("uniform"), dt=1e-3)
    np.testing.assert_allclose(split.values, plain.values, atol=1e-15)
    assert split.lo == g.lo


@pytest.mark.parametrize("transport", ["lattice", "interpolate"])
def test_splitting_conserves_mass(transport):
    p = ModelParams(0.2, 0.8, 0.2, 0.5)
    res = solve(two_bumps(), FpConfig(equation="surrogate", integrator="splitting", transport=transport, t_end=0.5, record_every=25), p)
    assert np.max(np.abs(res.record.mass - 1.0)) < 1e-12


@settings(max_examples=40)
@given(arrays(np.float64, 15, elements=st.floats(0.0, 3.0)), st.floats(-4.0, 4.0))
def test_shift_conservative_keeps_sum(vals, s):
    out = shift_conservative(vals, np.array([s]))
    assert out.sum() == pytest.approx(vals.sum(), abs=1e-12)
    assert out.min() >= 0.0


def test_shift_conservative_integer_shift():
    v = np.array([0.0, 1.0, 2.0, 0.0])
    np.testing.assert_array_equal(shift_conservative(v, np.array([1.0])), [0.0, 0.0, 1.0, 2.0])


def test_exact_centre_tracks_closed_form_mean():
    p = ModelParams(0.5, 0.5, 0.2, 0.5)
    f0 = two_bumps(101)
    res = solve(f0, FpConfig(equation="surrogate", center="exact", t_end=1.0, record_every=50), p)
    u0 = f0.mean()[0]
    expect = u0 * np.exp(-0.5 * res.record.times)
    assert np.max(np.abs(res.record.mean[:, 0] - expect)) < 5e-3


def test_exact_centre_needs_uniform_kernel():
    p = ModelParams(0.5, 0.5, 0.2, 0.5)
    with pytest.raises(ConfigError, match="uniform kernel"):
        solve(two_bumps(), FpConfig(equation="nonlocal", center="exact", t_end=0.01), p, InteractionKernel("cucker_smale"))


def test_snapshots_and_record_times():
    p = ModelParams(0.2, 0.8, 0.2, 0.5)
    res = solve(two_bumps(41), FpConfig(equation="surrogate", t_end=0.5, record_every=10**9, snapshot_times=(0.0, 0.25, 0.5)), p)
    assert sorted(res.record.snapshots) == [0.0, 0.25, 0.5]
    assert res.record.times[0] == 0.0 and res.record.times[-1] == 0.5
