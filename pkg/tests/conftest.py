import numpy as np
import pytest

from darp.types import entropy_weights


def random_labels(rng, m, k, concentration=1.0):
    """Row-normalised uniform draws (``concentration=None``) or Dirichlet rows."""
    if concentration is None:
        a = rng.uniform(size=(m, k))
        return a / a.sum(axis=1, keepdims=True)
    return rng.dirichlet(np.full(k, concentration), size=m)


def random_instance(rng, m, k):
    """Strictly positive labels, entropy weights and positive targets summing to M."""
    a = random_labels(rng, m, k, None)
    w = entropy_weights(a).weights
    c = rng.dirichlet(np.ones(k)) * m
    return a, w, c


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = {}


@pytest.fixture
def record_criterion():
    """Log one pass/fail line for an acceptance criterion, then assert it."""

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
