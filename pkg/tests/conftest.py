import numpy as np
import pytest

from radoncone import kernels
from radoncone.measures import FiniteDiscreteMeasure

#: lines collected by the acceptance tests, echoed at the end of the session
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    """Run the test once per available kernel backend."""
    previous = kernels.backend()
    kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(previous)


@pytest.fixture
def eta_ab():
    """``2 delta_a + 3 delta_b`` with ``a = 0.25`` and ``b = 0.75``."""
    return FiniteDiscreteMeasure.from_atoms([(2.0, 0.25), (3.0, 0.75)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
