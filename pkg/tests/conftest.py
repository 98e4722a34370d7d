"""
Shared fixtures: solver settings and small NOMA instances.
"""

import numpy as np
import pytest

from noma_tradeoff.config import NomaSettings
from noma_tradeoff.models import ChannelSet, SystemParams
from noma_tradeoff.utils import generate_channels, order_users


def _make_params(
    cs: ChannelSet,
    p_ava: float = 10.0,
    eta: float = 0.1,
    p_loss: float = 1.0,
    noise_var: float = 1.0,
) -> SystemParams:
    """SystemParams with a common SINR threshold for every user."""
    return SystemParams.from_sinr_thresholds(
        [eta] * cs.num_users,
        num_antennas=cs.num_antennas,
        num_users=cs.num_users,
        p_ava=p_ava,
        noise_vars=[noise_var] * cs.num_users,
        p_loss=p_loss,
    )


@pytest.fixture
def make_params():
    """Factory building SystemParams for a channel set."""
    return _make_params


@pytest.fixture
def settings() -> NomaSettings:
    """Solver settings independent of the environment."""
    return NomaSettings(
        solver_tol=1e-8,
        envelope_pieces=64,
        sca_eps=1e-4,
        max_outer_iters=60,
        log_level="WARNING",
    )


@pytest.fixture
def single_user() -> ChannelSet:
    """One user, two antennas, fixed channel."""
    h = np.array([[0.8 + 0.3j, -0.4 + 0.9j]])
    return ChannelSet(channels=h, distances=[1.0], ordered=True)


@pytest.fixture
def two_users() -> ChannelSet:
    """Two users, two antennas, drawn from a fixed seed."""
    return generate_channels(seed=3, distances=[1.0, 4.0], path_loss_exp=1.0, num_antennas=2)


@pytest.fixture
def three_users() -> ChannelSet:
    """Three users, three antennas, hand-picked and ordered."""
    h = np.array(
        [
            [1.2 + 0.1j, 0.4 - 0.6j, -0.3 + 0.2j],
            [0.5 - 0.2j, 0.6 + 0.3j, 0.1 + 0.1j],
            [0.2 + 0.1j, 0.3 + 0.1j, 0.2 - 0.1j],
        ]
    )
    return order_users(ChannelSet(channels=h, distances=[1.0, 2.0, 3.0]))
