import numpy as np
import pytest

from kcontract import builtin_kernel

HORIZON = 200


@pytest.fixture(scope="session")
def kernels():
    return {
        "da": builtin_kernel("drury_arveson", HORIZON),
        "k2": builtin_kernel("power", HORIZON, nu=2),
        "khalf": builtin_kernel("power", HORIZON, nu="1/2"),
        "dirichlet": builtin_kernel("dirichlet", HORIZON),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_CRITERIA_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_CRITERIA_KEY] = []


@pytest.fixture
def record_criterion(request):
    """Record one acceptance line ``(number, title, passed, detail)``; printed in the terminal summary."""
    lines = request.config.stash[_CRITERIA_KEY]

    def record(number: int, title: str, passed: bool, detail: str):
        line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
        lines.append((number, line))
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_CRITERIA_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines, key=lambda item: item[0]):
        terminalreporter.write_line(line)
