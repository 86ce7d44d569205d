"""
End-to-end experiments: the sequential replay oracle, determinism, and the
long virtual-clock runs behind the rate, mix and error-profile figures.
"""

from dataclasses import replace

import numpy as np
import pytest

from src.config import LedgerConfig, default_sweep_grid
from src.harness import BenchmarkManager, BenchmarkPlan
from src.inputs import ProfileType
from src.ledger import TxStatus, apply_writes
from src.ledger_access import ReadWriteSet
from src.sweep import SweepRunner, point_label
from src.world_state import Version, WorldState
from tests.helpers import small_config


def _config(terminals: int, preset: str = "calibrated", **overrides):
    config = small_config(ledger=LedgerConfig.with_preset(preset), **overrides)
    return replace(config, workload=replace(config.workload, terminals=terminals))


def _run(config, state: WorldState):
    result = BenchmarkManager(config).run(BenchmarkPlan.from_config(config, load=False), state=state)
    return result.rounds[0]


def _reads_current(state: WorldState, rwset: ReadWriteSet) -> bool:
    if any(state.version_of(key) != version for key, version in rwset.reads.items()):
        return False
    for range_read in rwset.range_reads:
        extent = range_read.extent()
        if extent is None:
            continue
        seen = [(key, entry.version) for key, entry in state.scan(*extent, reverse=range_read.reverse)]
        if seen != range_read.observed:
            return False
    return True


def _replay(base: WorldState, blocks) -> WorldState:
    """Apply only the transactions the ledger marked valid, one by one in block order."""
    replica = base.copy()
    for block in blocks:
        assert block.block_no == replica.height
        for index, (tx, outcome) in enumerate(zip(block.transactions, block.outcomes)):
            assert _reads_current(replica, tx.rwset) == outcome.valid, tx.tx_id
            if outcome.valid:
                apply_writes(replica, tx.rwset, Version(block.block_no, index))
        replica.height = block.block_no + 1
    return replica


def _check_replay(base_state, seed: int):
    terminals = int(np.random.default_rng(seed).integers(5, 51))
    config = _config(terminals, seed=seed, duration=30.0, keep_blocks=True)
    state = base_state.copy()
    round_result = _run(config, state)

    replica = _replay(base_state, round_result.blocks)
    assert replica.state_hash(include_versions=True) == state.state_hash(include_versions=True)

    valid = {o.tx_id for block in round_result.blocks for o in block.outcomes if o.valid}
    statuses = {r.tx_id: r.status for r in round_result.collector.records}
    assert {tx for tx, status in statuses.items() if status == TxStatus.COMMITTED.value} <= valid
    invalidated = {TxStatus.MVCC_CONFLICT.value, TxStatus.ABANDONED.value}
    assert not {tx for tx, status in statuses.items() if status in invalidated} & valid


@pytest.mark.parametrize("seed", range(5))
def test_committed_state_equals_sequential_replay(base_state, seed):
    _check_replay(base_state, seed)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(5, 105))
def test_sequential_replay_randomized(base_state, seed):
    _check_replay(base_state, seed)


def test_identical_plans_give_identical_results(base_state):
    config = _config(20, duration=30.0)
    first, second = base_state.copy(), base_state.copy()
    one, two = _run(config, first), _run(config, second)
    assert one.collector.to_frame().to_csv(index=False) == two.collector.to_frame().to_csv(index=False)
    assert first.state_hash(include_versions=True) == second.state_hash(include_versions=True)
    assert one.summary.to_dict() == two.summary.to_dict()


def _request_profiles(records):
    return [r.profile for r in records if r.retry == 0]


@pytest.mark.slow
def test_profile_mix_over_many_requests(base_state):
    round_result = _run(_config(400, preset="instant", duration=600.0), base_state.copy())
    profiles = _request_profiles(round_result.collector.records)
    assert len(profiles) >= 10_000
    share = {profile: profiles.count(profile.value) / len(profiles) for profile in ProfileType}
    assert share[ProfileType.NEW_ORDER] == pytest.approx(0.45, abs=0.01)
    assert share[ProfileType.PAYMENT] == pytest.approx(0.43, abs=0.01)
    for profile in (ProfileType.ORDER_STATUS, ProfileType.DELIVERY, ProfileType.STOCK_LEVEL):
        assert share[profile] == pytest.approx(0.04, abs=0.01)


@pytest.mark.slow
@pytest.mark.parametrize("terminals", [10, 50, 100, 200, 400])
def test_request_rate_is_linear_in_terminals(base_state, terminals):
    duration = 600.0
    round_result = _run(_config(terminals, preset="instant", duration=duration), base_state.copy())
    rate = len(_request_profiles(round_result.collector.records)) / duration
    assert rate == pytest.approx(terminals / 10, rel=0.15)


@pytest.fixture(scope="module")
def calibrated_sweep():
    """The full terminal grid on one full-scale warehouse, ten minutes per point."""
    config = _config(10, duration=600.0)
    config = replace(config, workload=replace(config.workload, scale_factor=1.0))
    return SweepRunner(config).run(grid=default_sweep_grid())


def _labels(terminals):
    grid = default_sweep_grid()
    return [point_label(grid.index(count), count) for count in terminals]


@pytest.mark.slow
def test_error_profile_anchors(calibrated_sweep):
    table = calibrated_sweep.error_profile()
    light = [count for count in default_sweep_grid() if count <= 100]
    invalidated = [table.loc[label, "invalidated"] for label in _labels(light)]
    assert invalidated[0] < 0.10
    assert invalidated[-1] == pytest.approx(0.50, abs=0.15)
    assert invalidated == sorted(invalidated)


@pytest.mark.slow
def test_overload_drives_goodput_towards_zero(calibrated_sweep):
    by_label = {s.label: s for s in calibrated_sweep.summaries}
    light, heavy = (by_label[label] for label in _labels((10, 400)))
    assert heavy.goodput / 400 < 0.1 * light.goodput / 10
    timeouts = heavy.status_fractions.get(TxStatus.ENDORSEMENT_TIMEOUT.value, 0.0) + \
        heavy.status_fractions.get(TxStatus.COMMIT_TIMEOUT.value, 0.0)
    assert timeouts > 0
