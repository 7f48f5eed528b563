import math

import pytest

from lpptem import electron_beam_from_voltage, laser_mode_geometry
from lpptem.ctf import OpticsConfig, PlateAlignment


@pytest.fixture(scope="session")
def beam80():
    return electron_beam_from_voltage(80.0)


@pytest.fixture(scope="session")
def beam300():
    return electron_beam_from_voltage(300.0)


@pytest.fixture
def mode_default():
    """1064 nm / NA 0.026 mode with an 18 degree peak phase."""
    return laser_mode_geometry(1064e-9, 0.026, 0.0, math.radians(18.0))


@pytest.fixture
def optics_f20():
    return OpticsConfig(focal_length=0.02)


@pytest.fixture
def centered():
    return PlateAlignment()
