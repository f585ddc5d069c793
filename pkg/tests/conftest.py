import math

import pytest

from tiloops import build_maudlin, build_trivial
from tiloops.rng import TrialStream

INV_SQRT2 = math.sqrt(0.5)


@pytest.fixture
def maudlin():
    return build_maudlin()


@pytest.fixture
def trivial():
    return build_trivial()


def find_trial(seed, below_half, start=0):
    """First trial index whose uniform draw falls below (or at/above) 1/2."""
    i = start
    while True:
        u = TrialStream(seed, i).uniform()
        if (u < 0.5) == below_half:
            return i, u
        i += 1
