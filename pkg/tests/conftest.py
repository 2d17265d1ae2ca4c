import numpy as np
import pytest

from gridrearrange.grid import GridSpec, Instance


def random_instance(m1, m2, n, seed, obstacles=()):
    rng = np.random.default_rng(seed)
    grid = GridSpec(m1, m2, obstacles=frozenset(obstacles))
    free = grid.free_vertices()
    s = rng.choice(len(free), n, replace=False)
    g = rng.choice(len(free), n, replace=False)
    return Instance(grid, [free[k] for k in s], [free[k] for k in g])


@pytest.fixture
def rand_inst():
    return random_instance


# acceptance results, filled by tests/test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
