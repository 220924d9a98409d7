import random

import numpy as np
import pytest

from tools.localfield import Place
from tools.orbits import NilpotentOrbit


@pytest.fixture
def rng():
    return random.Random(1)


@pytest.fixture
def np_rng():
    return np.random.default_rng(1)


@pytest.fixture
def orbit():
    """Builds a NilpotentOrbit from its Jordan block sizes."""

    def _orbit(*parts):
        return NilpotentOrbit.from_partition(list(parts))

    return _orbit


@pytest.fixture
def p2():
    return Place(kind="padic", prime=2)


@pytest.fixture
def p3():
    return Place(kind="padic", prime=3)


@pytest.fixture
def real():
    return Place(kind="real")
