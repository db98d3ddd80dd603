import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from chamauth import setup, toy_setup

TOY_Q_SPEC = 13
TOY_Q_BIG = 2147483647  # 2^31 - 1, keeps 1/q false-pass rates negligible

DATA_DIR = Path(__file__).parent / "data"


class FixedRng:
    """Replays a scripted sequence of randrange outputs."""

    def __init__(self, *values):
        self.values = list(values)

    def randrange(self, lo, hi=None):
        return self.values.pop(0)


@pytest.fixture(scope="session")
def curve_params():
    return setup(128)


@pytest.fixture(scope="session")
def toy_params():
    return toy_setup(TOY_Q_SPEC)


@pytest.fixture(scope="session")
def big_toy_params():
    return toy_setup(TOY_Q_BIG)


@pytest.fixture(params=["toy", "curve"], scope="session")
def backend_params(request, big_toy_params, curve_params):
    """Both backends; algebraic identities must hold verbatim on each."""
    return big_toy_params if request.param == "toy" else curve_params


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)
