import numpy as np
import pytest

from stochabound.cli import paper_system


def random_hurwitz(rng, n, margin=(0.5, 2.0)):
    """Random dense matrix shifted so its spectral abscissa is -U(margin)."""
    M = rng.normal(size=(n, n)) / np.sqrt(n)
    shift = np.max(np.linalg.eigvals(M).real) + rng.uniform(*margin)
    return M - shift * np.eye(n)


def random_spd(rng, n, shift=1e-1):
    B = rng.normal(size=(n, n))
    return B.T @ B / n + shift * np.eye(n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def paper():
    return paper_system(0.0)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
