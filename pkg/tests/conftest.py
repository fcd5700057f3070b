import math

import numpy as np
import pytest

from tmirs.geometry import Direction, OfdmConfig, SystemGeometry


@pytest.fixture
def default_geometry():
    # 24 GHz, 16x16 IRS, 8-element ULA, Tx at (15, 10) deg, legit user at (40, 30) deg
    return SystemGeometry()


@pytest.fixture
def default_ofdm():
    return OfdmConfig(n_subcarriers=64, subcarrier_spacing=120e3, carrier_freq=24e9, n_symbols=1024)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_direction(rng) -> Direction:
    return Direction(rng.uniform(0, math.pi / 2), rng.uniform(-math.pi, math.pi))
