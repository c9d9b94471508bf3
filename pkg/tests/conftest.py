import numpy as np
import pytest

from deltanet import kernels
from deltanet.gru import GruParams


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    with kernels.use_backend(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_params(rng):
    return GruParams.random(4, 6, rng)


_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record ``(criterion, passed, detail)`` for the end-of-run summary."""

    def record(criterion, passed, detail):
        _ACCEPTANCE.append((criterion, bool(passed), detail))
        print(f"{'PASS' if passed else 'FAIL'} {criterion}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {criterion}: {detail}")
