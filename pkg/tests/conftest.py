import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")


def vectors(n, bound=10.0):
    return st.lists(st.floats(-bound, bound, allow_nan=False, allow_infinity=False),
                    min_size=n, max_size=n).map(np.array)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
