import numpy as np
import pytest

from scissorsim.fock import DensityOperator, StateVector

ACCEPTANCE_LINES: list[str] = []


def random_state(basis, rng, norm=1.0):
    v = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    return StateVector(basis, np.sqrt(norm) * v / np.linalg.norm(v))


def random_density(basis, rng, rank=3):
    g = rng.normal(size=(basis.dim, rank)) + 1j * rng.normal(size=(basis.dim, rank))
    m = g @ g.conj().T
    return DensityOperator(basis, m / np.trace(m).real)


@pytest.fixture
def rng():
    return np.random.default_rng(20111)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
