import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from regtrack.model import Exosystem, LinearSystem, assemble_exosystem

settings.register_profile(
    "repo", deadline=None, max_examples=40, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


def siso(C, a=(0.0, 0.0)):
    """Companion-form SISO plant with denominator ``s^n + a[n-1] s^(n-1) + ... + a[0]``."""
    n = len(a)
    A = np.eye(n, k=1)
    A[-1] = -np.asarray(a, dtype=float)
    return LinearSystem(A, np.eye(n)[:, [-1]], np.atleast_2d(np.asarray(C, dtype=float)))


@pytest.fixture
def double_integrator():
    return siso([1.0, 0.0])


@pytest.fixture
def mp_plant():
    """(s+2)/s^2"""
    return siso([2.0, 1.0])


@pytest.fixture
def nmp_plant():
    """(s-2)/s^2"""
    return siso([-2.0, 1.0])


@pytest.fixture
def two_chains():
    A = np.zeros((3, 3))
    A[0, 1] = 1.0
    B = np.zeros((3, 2))
    B[1, 0] = B[2, 1] = 1.0
    return LinearSystem(A, B, np.array([[1.0, 0, 0], [0, 0, 1.0]]))


@pytest.fixture
def sine_exo():
    return Exosystem(np.array([[0.0, 1.0], [-1.0, 0.0]]), np.array([[1.0, 0.0]]),
                     np.array([0.0, 1.0]), block_sizes=(2,))


@pytest.fixture
def step_exo():
    return Exosystem(np.zeros((1, 1)), np.ones((1, 1)), np.ones(1), block_sizes=(1,))


@pytest.fixture
def sine_step_exo():
    return assemble_exosystem([(np.array([[0.0, 1.0], [-1.0, 0.0]]), np.array([1.0, 0.0])),
                               (np.zeros((1, 1)), np.ones(1))], np.array([0.0, 1.0, 1.0]))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(autouse=True)
def _quiet_conditioning_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="canonical transform is ill-conditioned")
        yield


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
