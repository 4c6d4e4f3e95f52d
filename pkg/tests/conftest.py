import numpy as np
import pytest

from langdei.io import load_bundle


@pytest.fixture(scope="session")
def bundle():
    return load_bundle()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240814)
