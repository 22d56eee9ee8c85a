import numpy as np
import pytest

from mcdenoise.neuralnet import init_model

# (criterion, passed, detail) rows filled in by test_acceptance.py
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_model():
    """257-in/257-out net with narrow hidden layers and some positive biases."""
    m = init_model((257, 32, 32, 32, 257), dropout_rate=0.2, seed=7)
    r = np.random.default_rng(8)
    for b in m.biases:
        b[:] = r.uniform(0.0, 0.1, size=b.shape).astype(b.dtype)
    return m


@pytest.fixture
def magnitude_frames(rng):
    return np.abs(rng.standard_normal((12, 257))) * 3.0
