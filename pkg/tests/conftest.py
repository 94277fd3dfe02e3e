import math
from pathlib import Path

import numpy as np
import pytest

from hinfsdp import FrequencyBand, StateSpace, random_stable

SYSTEMS = Path(__file__).resolve().parent.parent / "systems"


@pytest.fixture
def systems_dir():
    return SYSTEMS


@pytest.fixture
def example1():
    return StateSpace(0, 0, 1, 1)


@pytest.fixture
def scalar05():
    return StateSpace(0.5, 1, 1, 0)


def suite_system(rng):
    """Random Schur-stable complex system with n <= 8, m, l <= 4, rho <= 0.95."""
    n = int(rng.integers(1, 9))
    m = int(rng.integers(1, 5))
    l = int(rng.integers(1, 5))
    return random_stable(n, m, l, rho=rng.uniform(0.3, 0.95), rng=rng)


def suite_band(rng, kind):
    if kind == "low":
        return FrequencyBand.low(rng.uniform(0.2, 3.0))
    if kind == "high":
        return FrequencyBand.high(rng.uniform(0.2, 3.0))
    t1 = rng.uniform(-math.pi, math.pi - 0.3)
    return FrequencyBand.middle(t1, rng.uniform(t1 + 0.2, math.pi))


def steady_state(sys, theta, w):
    """Steady state x of e^{j theta} x = A x + B w."""
    w = np.asarray(w, dtype=complex)
    return np.linalg.solve(np.exp(1j * theta) * np.eye(sys.n) - sys.A, sys.B @ w)


def sinusoid_covariance(sys, theta, w):
    v = np.concatenate([steady_state(sys, theta, w), np.asarray(w, dtype=complex)])
    return np.outer(v, v.conj())


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
