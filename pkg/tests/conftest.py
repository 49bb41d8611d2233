import numpy as np
import pytest

from noma_lab.channel import ChannelState
from noma_lab.config import SystemConfig


@pytest.fixture
def small_cfg():
    return SystemConfig(M=3, N=3, H=2, V=2, rng_seed=7)


def make_channels(M: int, N: int, sigma2: float = 1.0,
                  seed: int = 0, scale: float = 1.0) -> ChannelState:
    """Synthetic unit-scale channel state for formula-level tests."""
    rng = np.random.default_rng(seed)

    def draw(shape):
        return scale * (rng.standard_normal(shape)
                        + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)

    return ChannelState(
        h_a_r=draw((M, N)), h_b_r=draw((M, N)),
        h_a_e=draw((M, N)), h_b_e=draw((M, N)),
        g_a=draw((M, N)), g_b=draw((M, N)),
        g_e=draw((N,)), sigma2=sigma2).validate()


def const_channels(M: int, N: int, value: complex = 1.0 + 0.0j,
                   sigma2: float = 1.0) -> ChannelState:
    """All-equal gains; handy for hand-substituted expected values."""
    full = np.full((M, N), value, dtype=complex)
    return ChannelState(
        h_a_r=full.copy(), h_b_r=full.copy(),
        h_a_e=full.copy(), h_b_e=full.copy(),
        g_a=full.copy(), g_b=full.copy(),
        g_e=np.full(N, value, dtype=complex), sigma2=sigma2).validate()
