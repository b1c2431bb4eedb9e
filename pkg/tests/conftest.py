import numpy as np
import pytest
from hypothesis import settings

from zakfd.channel import effective_channel, fd_channel, periodize, veh_a_paths
from zakfd.pulses import PulseShape
from zakfd.zak import GridParams

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def desk_grid():
    return GridParams(31, 37, 30e3)


@pytest.fixture(scope="session")
def veh_a_rrc(desk_grid):
    """One RRC Veh-A draw at 815 Hz on the desk grid: (h_eff, FD channel)."""
    h = effective_channel(veh_a_paths(815.0, 7), PulseShape.default("rrc"), desk_grid)
    return h, fd_channel(periodize(h))
