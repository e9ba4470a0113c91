import numpy as np
import pytest

from rieszfluct.covariance import ModelParameters


GENERAL_S = (-0.9, -0.5, -0.2, 0.2, 0.5, 0.9)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=GENERAL_S)
def s_general(request):
    return request.param


def params(s, beta=1.0, conjectural=False):
    return ModelParameters(beta, s, conjectural)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[num])
