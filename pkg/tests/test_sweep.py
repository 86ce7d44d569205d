import pytest

from src.clock import ClockMode
from src.sweep import SweepRunner, point_label
from tests.helpers import small_config


def test_point_label():
    assert point_label(3, 40) == "03-40"
    assert point_label(12, 400) == "12-400"


def test_sweep_runs_every_point_on_a_fresh_copy(base_state):
    before = base_state.state_hash(include_versions=True)
    result = SweepRunner(small_config(duration=20.0)).run(base_state, grid=(2, 4))

    assert [r.label for r in result.rounds] == ["00-2", "01-4"]
    assert [r.terminals for r in result.rounds] == [2, 4]
    assert base_state.state_hash(include_versions=True) == before
    assert [s.terminals for s in result.summaries] == [2, 4]

    records = result.records()
    assert set(records["config"]) <= {"00-2", "01-4"}
    assert set(result.error_profile().index) == set(records["config"])
    assert set(result.precision_by_terminals()) == {2, 4}


def test_repeated_grid_points_replay_the_same_round():
    runner = SweepRunner(small_config(duration=10.0))
    result = runner.run(grid=(1, 1))
    assert [r.label for r in result.rounds] == ["00-1", "01-1"]
    assert result.rounds[0].digest != result.rounds[1].digest
    assert result.rounds[0].summary.attempts == result.rounds[1].summary.attempts
    assert result.rounds[0].state_hash == result.rounds[1].state_hash


def test_virtual_clock_precision_never_tightens(base_state):
    result = SweepRunner(small_config(duration=20.0)).run(base_state, grid=(2, 4))
    assert all(s.median == 0.0 for s in result.precision_summaries().values())
    assert not result.precision_tightens()


@pytest.mark.slow
def test_wall_clock_precision_tightens_with_terminals_per_worker(base_state):
    config = small_config(clock=ClockMode.WALL, speedup=5.0, duration=60.0)
    result = SweepRunner(config).run(base_state, grid=(10, 50, 100, 400))
    summaries = result.precision_summaries()
    assert sorted(summaries) == [10, 50, 100, 400]
    assert result.precision_tightens(), {count: s.median for count, s in summaries.items()}
