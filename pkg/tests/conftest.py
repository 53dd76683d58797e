import numpy as np
import pytest

from boundcount.potential import CompactSupport, values

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_instance(rng, L_max=60, low=-3.0, high=1.0):
    """(potential, lam, L) with V(n) uniform in [low, high] on 1..L and lam in [-2, 0]."""
    L = int(rng.integers(1, L_max + 1))
    V = CompactSupport(tuple(rng.uniform(low, high, L)))
    lam = float(rng.uniform(-2.0, 0.0))
    return V, lam, L


def whole_line_dense(left, right, L):
    """Dense matrix on sites -L..L; ``left`` is indexed by m = 1 - n."""
    v_left = values(left, 1, L + 2)
    v_right = values(right, 1, L + 1)
    diag = 2.0 + np.concatenate([v_left[::-1], v_right])
    off = -np.ones(2 * L)
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
