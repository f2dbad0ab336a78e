import numpy as np
import pytest

from pathrec.embeddings import EmbeddingTable

from helpers import make_g0


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, printed after the run."""
    try:
        from test_acceptance import CRITERION_RESULTS
    except ImportError:
        return
    if CRITERION_RESULTS:
        terminalreporter.section("acceptance criteria")
        for name, outcome in CRITERION_RESULTS:
            terminalreporter.write_line(f"[ACCEPTANCE] {name}: {outcome}")


@pytest.fixture
def g0():
    return make_g0()


@pytest.fixture
def zero_emb_g0():
    """d=1 all-zero table for G0: every item score is 0, sigmoid mass 0.5."""
    return EmbeddingTable(np.zeros((1, 1)), np.zeros((3, 1)), np.zeros((3, 1)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
