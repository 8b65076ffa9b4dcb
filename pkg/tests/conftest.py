import numpy as np
import pytest

from oneshot import UserTypeModel


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_model(rng, num_types=2, num_items=4, low_term=0.05):
    return UserTypeModel(rng.uniform(0, 1, (num_types, num_items)), rng.uniform(low_term, 1, num_types))


@pytest.fixture
def small_model(rng):
    return random_model(rng, 3, 5)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
