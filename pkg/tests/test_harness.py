from dataclasses import replace

import pytest
import simpy

from src import harness
from src.clock import VirtualClock, to_ticks
from src.exceptions import HarnessFault, RoundAbortedError
from src.harness import (
    BenchmarkManager,
    BenchmarkPlan,
    DrivingMode,
    PreparedState,
    RoundControl,
    RoundSpec,
    Worker,
    partition_terminals,
    prepare_round,
)
from src.ledger import AttemptResult, TxStatus
from src.messages import Message, MessageType
from tests.helpers import populate, small_config


def _with_terminals(config, terminals):
    return replace(config, workload=replace(config.workload, terminals=terminals))


def test_partition_terminals():
    assert [len(ids) for ids in partition_terminals(10, 3)] == [4, 3, 3]
    assert partition_terminals(10, 3)[0] == (1, 2, 3, 4)
    assert [len(ids) for ids in partition_terminals(100, 4)] == [25] * 4
    assert partition_terminals(0, 2) == ((), ())
    with pytest.raises(ValueError):
        partition_terminals(5, 0)


def test_prepare_round_is_deterministic():
    plan = BenchmarkPlan.from_config(small_config(workers=3))
    first, second = prepare_round(plan, 1), prepare_round(plan, 1)
    assert first == second and first.digest == second.digest
    assert PreparedState.from_payload(first.to_payload()) == first
    assert first.terminal_count == 10
    load = prepare_round(plan, 0)
    assert load.terminal_count == 0
    assert load.population_seed == first.population_seed
    assert load.round_seed != first.round_seed


def test_prepared_state_depends_on_seed():
    one = prepare_round(BenchmarkPlan.from_config(small_config(seed=1), load=False), 0)
    two = prepare_round(BenchmarkPlan.from_config(small_config(seed=2), load=False), 0)
    assert one.digest != two.digest


def test_malformed_payload():
    with pytest.raises(HarnessFault):
        PreparedState.from_payload({"round_label": "x"})


def test_invalid_plans():
    config = small_config()
    load = RoundSpec("load", 1, DrivingMode.COMPLETION_SIGNAL)
    run = RoundSpec("run", 1, DrivingMode.DURATION, duration=10)
    with pytest.raises(HarnessFault):
        BenchmarkPlan(config, (replace(run, worker_count=0),))
    with pytest.raises(HarnessFault):
        BenchmarkPlan(config, (run, load))
    with pytest.raises(HarnessFault):
        BenchmarkPlan(config, (replace(load, worker_count=2),))


def test_round_control_budget():
    control = RoundControl(simpy.Environment(), budget=2)
    assert control.admit() and control.admit()
    assert control.exhausted.triggered
    assert not control.admit()
    assert RoundControl(simpy.Environment(), budget=0).exhausted.triggered


def test_empty_load_completes_immediately():
    config = replace(small_config(), workload=replace(small_config().workload, warehouses=0))
    result = BenchmarkManager(config).run(BenchmarkPlan.from_config(config))
    assert result.load.entities == 0 and result.load.transactions == 0
    assert len(result.state) == 0
    assert result.rounds[0].terminals == 0
    assert result.rounds[0].summary.attempts == 0


def test_pipeline_load_matches_direct_population():
    config = small_config()
    plan = BenchmarkPlan(config, (RoundSpec("load", 1, DrivingMode.COMPLETION_SIGNAL),))
    result = BenchmarkManager(config).run(plan)
    assert result.load.state_hash == populate(config).state_hash()
    assert result.load.transactions >= result.load.entities / config.load_batch_size
    assert result.load.blocks > 1


def test_load_requires_an_empty_ledger(loaded_state):
    config = small_config()
    with pytest.raises(HarnessFault):
        BenchmarkManager(config).run(BenchmarkPlan.from_config(config), state=loaded_state)


def test_run_requires_loaded_state():
    config = small_config()
    with pytest.raises(HarnessFault):
        BenchmarkManager(config).run(BenchmarkPlan.from_config(config, load=False))


def test_duration_round(base_state, loaded_state):
    config = small_config()
    result = BenchmarkManager(config).run(BenchmarkPlan.from_config(config, load=False), state=loaded_state)
    round_result = result.rounds[0]
    summary = round_result.summary
    assert round_result.terminals == 10 and round_result.window == 60.0
    assert 35 <= summary.requests <= 90
    assert summary.attempts >= summary.requests
    assert summary.goodput <= summary.tps
    assert round_result.state_hash == loaded_state.state_hash() != base_state.state_hash()
    assert round_result.summary.precision["violations"] == 0


def test_transaction_count_round(loaded_state):
    config = small_config(driving_mode="tx-count", tx_count=25)
    result = BenchmarkManager(config).run(BenchmarkPlan.from_config(config, load=False), state=loaded_state)
    assert result.rounds[0].summary.attempts == 25
    assert len(result.rounds[0].collector.records) == 25


def test_zero_terminals(loaded_state):
    config = _with_terminals(small_config(), 0)
    result = BenchmarkManager(config).run(BenchmarkPlan.from_config(config, load=False), state=loaded_state)
    assert result.rounds[0].summary.attempts == 0
    assert result.rounds[0].summary.tpmc == 0.0


def test_worker_count_does_not_change_the_mix(base_state):
    fractions = []
    for workers in (1, 4):
        config = _with_terminals(small_config(workers=workers), 100)
        result = BenchmarkManager(config).run(BenchmarkPlan.from_config(config, load=False),
                                              state=base_state.copy())
        round_result = result.rounds[0]
        assert round_result.terminals == 100 and round_result.worker_count == workers
        fractions.append(round_result.summary.profile_fractions)
    for profile, share in fractions[0].items():
        assert fractions[1].get(profile, 0.0) == pytest.approx(share, abs=0.05)


def test_digest_mismatch_aborts_the_round(loaded_state, monkeypatch):
    original = Worker.handle

    def handle(self, message):
        if message.type is MessageType.PREPARE and self.worker_id == 1:
            self.prepare(PreparedState.from_payload(message.payload))
            self.outbox.send(Message(MessageType.READY, message.round, {"worker_id": 1, "digest": "bogus"}))
            return
        original(self, message)

    monkeypatch.setattr(harness.Worker, "handle", handle)
    config = small_config(workers=2)
    with pytest.raises(RoundAbortedError, match="disagree"):
        BenchmarkManager(config).run(BenchmarkPlan.from_config(config, load=False), state=loaded_state)


def test_conflicts_are_abandoned_after_the_retry_cap():
    config = _with_terminals(small_config(), 1)
    config = replace(config, workload=replace(config.workload, retry_cap=2))
    env = simpy.Environment()

    def conflicted(request):
        yield env.timeout(10)
        return AttemptResult(request.tx_id, TxStatus.MVCC_CONFLICT, env.now - 10, env.now)

    worker = Worker(0, env, VirtualClock(), config, conflicted, RoundControl(env))
    prepared = prepare_round(BenchmarkPlan.from_config(config, load=False), 0)
    worker.inbox.send(Message(MessageType.PREPARE, prepared.round_label, prepared.to_payload()))
    worker.inbox.send(Message(MessageType.START, prepared.round_label))
    worker.poll()
    assert worker.outbox.receive().payload["digest"] == prepared.digest
    env.run(until=to_ticks(120))

    first = [record for record in worker.collector.records if record.seq == 1]
    assert [record.retry for record in first] == [0, 1, 2]
    assert [record.status for record in first] == [TxStatus.MVCC_CONFLICT.value] * 2 + [TxStatus.ABANDONED.value]


def test_worker_rejects_unexpected_messages():
    env = simpy.Environment()
    config = small_config()
    worker = Worker(0, env, VirtualClock(), config, None, RoundControl(env))
    with pytest.raises(HarnessFault):
        worker.start()
    with pytest.raises(HarnessFault):
        worker.handle(Message(MessageType.SUBMIT, "r"))
