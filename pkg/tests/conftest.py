import numpy as np
import pytest

from ispsim.image import BayerPattern, RawImage, RgbImage
from ispsim.profile import default_profile


@pytest.fixture(scope="session")
def profile():
    return default_profile()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def random_rgb(rng):
    return RgbImage(rng.uniform(0.0, 1.0, size=(6, 8, 3)))


@pytest.fixture
def random_raw(rng):
    return RawImage(
        rng.uniform(0.0, 1.0, size=(6, 6)),
        pattern=BayerPattern.RGGB,
        continuous=True,
    )
