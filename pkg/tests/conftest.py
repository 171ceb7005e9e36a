import numpy as np
import pytest

from alkalispin.model import RateSet, species_cesium


@pytest.fixture
def cs():
    return species_cesium()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def sd100():
    """Pure S-damping at 100 1/s."""
    return RateSet(R_sr=100.0)
