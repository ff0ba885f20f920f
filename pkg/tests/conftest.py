import numpy as np
import pytest
from hypothesis import settings

from bipdo.lattice import GridSpec

settings.register_profile("repo", max_examples=25, deadline=None)
settings.load_profile("repo")


@pytest.fixture
def grid256():
    return GridSpec.uniform(12.0, 256, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def acceptance_log(request):
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])
    return lines


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
