import numpy as np
import pytest

from swarmkin.model_core import InteractionKernel, ModelParams


@pytest.fixture
def params_1d():
    return ModelParams(lam=0.2, mu=0.8, sigma2=0.2, delta=0.5)


@pytest.fixture
def cs():
    return InteractionKernel("cucker_smale", 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[n])
