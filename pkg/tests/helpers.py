"""Test helpers: small configurations, direct writes and endorsement shortcuts."""

from dataclasses import replace
from typing import Iterable

from src.config import Config, LedgerConfig, WorkloadConfig
from src.contract import Contract, ProfileRequest
from src.entities import Customer, Entity
from src.harness import BenchmarkPlan, populate_directly, prepare_round
from src.ledger import (
    Block,
    CutReason,
    EndorsedTransaction,
    apply_writes,
    validate_and_commit,
)
from src.ledger_access import LedgerAccess
from src.registry import TpccRegistries
from src.world_state import Version, WorldState

# 333 items, 10 customers and 10 orders per district, orders 8..10 undelivered.
SMALL_SCALE = 300.0


def small_config(**overrides) -> Config:
    """One warehouse at test scale, instant ledger, short rounds."""
    config = Config(
        workload=WorkloadConfig(warehouses=1, scale_factor=SMALL_SCALE),
        ledger=LedgerConfig.with_preset("instant"),
        duration=60.0,
        seed=11,
    )
    return replace(config, **overrides)


def populate(config: Config) -> WorldState:
    plan = BenchmarkPlan.from_config(config, load=False)
    return populate_directly(WorldState(), prepare_round(plan, 0))


def write_entities(state: WorldState, entities: Iterable[Entity]) -> None:
    """Create entities straight in the committed state (one pseudo block)."""
    access = LedgerAccess(state)
    registries = TpccRegistries(access)
    for entity in entities:
        registries.create(entity)
    apply_writes(state, access.read_write_set, Version(state.height, 0))
    state.height += 1


def committed(state: WorldState) -> TpccRegistries:
    """Registries reading the committed state (their read set is discarded)."""
    return TpccRegistries(LedgerAccess(state))


def make_customer(c_id: int, c_last: str, c_first: str = "FIRST", w_id: int = 1, d_id: int = 1,
                  **fields) -> Customer:
    values = dict(
        c_id=c_id, c_d_id=d_id, c_w_id=w_id, c_first=c_first, c_middle="OE", c_last=c_last,
        c_street_1="street one", c_street_2="street two", c_city="city", c_state="ST",
        c_zip="123411111", c_phone="0123456789012345", c_since=0, c_credit="GC",
        c_credit_lim=5_000_000, c_discount=0, c_balance=-1_000, c_ytd_payment=1_000,
        c_payment_cnt=1, c_delivery_cnt=0, c_data="data",
    )
    values.update(fields)
    return Customer(**values)


def endorse(state: WorldState, record, tx_id: str = "tx"):
    """Execute a profile against the committed state; returns (response, read-write set)."""
    access = LedgerAccess(state)
    response = Contract().invoke(ProfileRequest.from_args(tx_id, record), access)
    return response, access.read_write_set


def commit_one(state: WorldState, record, tx_id: str = "tx"):
    """Endorse and commit a single transaction in its own block."""
    response, rwset = endorse(state, record, tx_id)
    tx = EndorsedTransaction(tx_id, 1, ProfileRequest.from_args(tx_id, record), rwset, 0, rwset.byte_size())
    outcome = validate_and_commit(state, Block(state.height, CutReason.MAX_COUNT, [tx], 0), now=0)[0]
    return response, outcome
