import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mllkm.data import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_dataset(rng, n=20, d=3):
    X = rng.normal(size=(n, d))
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    if y.min() == y.max():  # both classes present
        y[0] = -y[0]
    return Dataset(X, y)
