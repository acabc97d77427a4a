import numpy as np
import pytest

from optspace.sparse_core import ObservedMatrix, sample_mask


def random_lowrank(m, n, r, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    return scale * rng.standard_normal((m, r)) @ rng.standard_normal((n, r)).T


def random_observed(m, n, e, seed, values=None):
    rows, cols = sample_mask(m, n, e, seed)
    if values is None:
        values = np.random.default_rng(seed + 7).standard_normal(e)
    return ObservedMatrix(m, n, rows, cols, values)


def observe_dense(N, e, seed):
    m, n = N.shape
    return ObservedMatrix.from_dense(N, sample_mask(m, n, e, seed))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
