import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmkin.grid import GridField
from swarmkin.model_core import (
    ConfigError,
    InteractionKernel,
    ModelParams,
    TargetDomain,
    drift_B,
    indicator_complement,
    kappa_eval,
    kernel_eval,
    mean_exact,
    shifted_center,
)

coord = st.floats(-50, 50, allow_nan=False)


def test_uniform_kernel_is_one():
    k = InteractionKernel("uniform")
    assert kernel_eval(k, 3.0, -7.0) == 1.0
    assert np.all(kernel_eval(k, np.zeros((4, 2)), np.ones((4, 2))) == 1.0)


def test_cucker_smale_trivial_values(cs):
    assert kernel_eval(cs, 0.3, 0.3) == 1.0
    assert kernel_eval(cs, 0.0, 1.0) == 0.5
    assert kernel_eval(cs, [0.0, 0.0], [1.0, 0.0]) == 0.5
    assert kernel_eval(InteractionKernel("cucker_smale", 2.0), 0.0, 1.0) == 0.25


def test_unknown_kernel_lists_valid_names():
    with pytest.raises(ConfigError, match="uniform, cucker_smale"):
        InteractionKernel("gaussian")


@given(coord, coord, st.floats(0.1, 5))
def test_kernel_symmetric_and_bounded(x, y, gamma):
    k = InteractionKernel("cucker_smale", gamma)
    a, b = kernel_eval(k, x, y), kernel_eval(k, y, x)
    assert a == b
    assert 0.0 <= a <= 1.0


def test_indicator_trivial_cases():
    dom = TargetDomain((0.0,), 0.5)
    assert indicator_complement(dom, 0.0) == 0.0
    assert indicator_complement(dom, 1.0) == 1.0
    # the ball is closed
    assert indicator_complement(dom, 0.5) == 0.0
    assert indicator_complement(dom, -0.5) == 0.0
    dom2 = TargetDomain((1.0, -1.0), 1.0)
    np.testing.assert_array_equal(indicator_complement(dom2, [[1.0, -1.0], [3.0, -1.0], [2.0, -1.0]]), [0.0, 1.0, 0.0])


def test_kappa_trivial_cases(params_1d):
    p = params_1d
    assert kappa_eval(p, 0.0) == pytest.approx(0.2 + 0.125, abs=0)
    assert kappa_eval(p, 2.0) == 0.2
    assert kappa_eval(p, 0.5) == 0.2
    assert kappa_eval(p, 1.0, center=1.0) == pytest.approx(0.325, abs=0)


@given(st.floats(-10, 10))
def test_kappa_continuous_and_bounded(x):
    p = ModelParams(0.3, 0.7, 0.1, 1.0)
    k = float(kappa_eval(p, x))
    assert p.sigma2 <= k <= p.kappa_max
    assert abs(float(kappa_eval(p, x + 1e-9)) - k) < 1e-8


def test_drift_uniform_particles():
    p = ModelParams(0.2, 0.8, 0.1, 0.5)
    # a single agent at 0.5 with a swarm at -1: 0.2*0.5 + 0.8*(0.5 + 1)
    b = drift_B(p, InteractionKernel("uniform"), 0.5, np.array([[-1.0]]))
    assert float(b[0]) == pytest.approx(1.3, abs=1e-15)


def test_drift_grid_matches_particles_for_uniform_kernel():
    p = ModelParams(0.5, 0.5, 0.1, 0.5)
    g = GridField.from_function(lambda x: np.exp(-((x[..., 0] - 1.0) ** 2)), -6, 6, 241, 1, normalize=True)
    x = np.linspace(-2, 2, 5)
    b = drift_B(p, InteractionKernel("uniform"), x, g)
    expect = 0.5 * x + 0.5 * (x - g.mean()[0])
    np.testing.assert_allclose(b[:, 0], expect, atol=1e-12)


def test_drift_cs_particle_quadrature(cs):
    p = ModelParams(0.0, 1.0, 0.1, 0.5)
    swarm = np.array([[0.0], [1.0]])
    # (1/2)[1*(0) + 0.5*(0-1)] at x = 0
    assert float(drift_B(p, cs, 0.0, swarm)[0]) == pytest.approx(-0.25)


def test_mean_exact_value():
    p = ModelParams(0.2, 0.8, 0.1, 0.5)
    assert mean_exact(p, -1.0, 5.0).item() == pytest.approx(-math.exp(-1.0), rel=1e-15)
    np.testing.assert_allclose(mean_exact(p, [-1.0], [0.0, 5.0])[:, 0], [-1.0, -math.exp(-1.0)])


def test_shifted_center():
    p = ModelParams(0.25, 0.75, 0.1, 0.5, x0=(2.0,))
    assert float(shifted_center(p, [-2.0])[0]) == pytest.approx(0.25 * 2 - 0.75 * 2)


@pytest.mark.parametrize(
    "kwargs, msg",
    [
        (dict(lam=0.3, mu=0.3), "lambda \\+ mu"),
        (dict(lam=1.2, mu=-0.2), "lambda must lie"),
        (dict(sigma2=0.0), "sigma2"),
        (dict(delta=-1.0), "delta"),
        (dict(dim=3), "dim"),
    ],
)
def test_params_validation(kwargs, msg):
    base = dict(lam=0.5, mu=0.5, sigma2=0.1, delta=0.5)
    base.update(kwargs)
    with pytest.raises(ConfigError, match=msg):
        ModelParams(**base)


def test_params_endpoints_allowed():
    ModelParams(1.0, 0.0, 0.1, 0.5)
    ModelParams(0.0, 1.0, 0.1, 0.5)


@settings(max_examples=50)
@given(st.floats(0, 1), st.floats(-5, 5), st.floats(0, 20))
def test_mean_exact_contracts_toward_target(lam, u0, t):
    p = ModelParams(lam, 1 - lam, 0.1, 0.5, x0=(0.5,))
    m = mean_exact(p, u0, t).item()
    assert abs(m - 0.5) <= abs(u0 - 0.5) + 1e-12
