import numpy as np
import pytest


def random_density(d, rng, rank=None):
    rank = rank or d
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_povm_elements(d, k, rng):
    """Random k-outcome POVM: A_i = G_i G_i^H normalised by S^{-1/2} A_i S^{-1/2}."""
    gs = [rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)) for _ in range(k)]
    a = np.array([g @ g.conj().T for g in gs])
    w, v = np.linalg.eigh(a.sum(axis=0))
    s = (v / np.sqrt(w)) @ v.conj().T
    return np.array([s @ x @ s for x in a])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
