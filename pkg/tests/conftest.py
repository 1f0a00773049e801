import numpy as np
import pytest

from qbcattack.qstate import StateVector, SystemLayout

ACCEPTANCE_LINES: list[str] = []


def random_state(rng, dim_a, dim_b, dim_anc=1):
    layout = SystemLayout(dim_a, dim_b, dim_anc)
    z = rng.standard_normal(layout.total) + 1j * rng.standard_normal(layout.total)
    return StateVector(layout, z, normalize=True)


def random_matrix(rng, rows, cols):
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_unitary(rng, dim):
    q, r = np.linalg.qr(random_matrix(rng, dim, dim))
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
