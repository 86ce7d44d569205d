"""Shared fixtures: a small loaded world state and a virtual-clock network factory."""

from typing import Optional

import pytest
import simpy

from src.config import LedgerConfig
from src.ledger import LedgerClient, LedgerNetwork
from src.world_state import WorldState
from tests.helpers import populate, small_config


@pytest.fixture(scope="session")
def base_state() -> WorldState:
    return populate(small_config())


@pytest.fixture
def loaded_state(base_state) -> WorldState:
    return base_state.copy()


@pytest.fixture
def network_factory():
    """Build (env, network, client) over a state with a ledger config."""
    def build(state: WorldState, ledger: Optional[LedgerConfig] = None, keep_blocks: bool = True):
        env = simpy.Environment()
        network = LedgerNetwork(env, state, ledger or LedgerConfig.with_preset("instant"),
                                keep_blocks=keep_blocks)
        return env, network, LedgerClient(network)
    return build
