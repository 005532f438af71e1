import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("amm", max_examples=60, deadline=None)
settings.load_profile("amm")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
