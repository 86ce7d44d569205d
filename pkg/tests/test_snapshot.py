import pytest

from src.exceptions import SnapshotNotFoundError
from src.snapshot import SnapshotStore
from src.world_state import WorldState
from tests.helpers import make_customer, write_entities


def test_round_trip(loaded_state, tmp_path):
    store = SnapshotStore(tmp_path / "snapshots" / "state.sqlite")
    meta = store.save(loaded_state, seed=11, warehouses=1, scale_factor=300.0)
    assert meta.entry_count == len(loaded_state)

    restored, restored_meta = store.load()
    assert restored.state_hash(include_versions=True) == loaded_state.state_hash(include_versions=True)
    assert restored.height == loaded_state.height
    assert restored_meta.seed == 11 and restored_meta.to_dict()["scale_factor"] == 300.0


def test_missing_snapshot(tmp_path):
    with pytest.raises(SnapshotNotFoundError):
        SnapshotStore(tmp_path / "absent.sqlite").load()
    empty = tmp_path / "empty.sqlite"
    empty.write_bytes(b"")
    with pytest.raises(SnapshotNotFoundError):
        SnapshotStore(empty).load()


def test_save_replaces_previous_snapshot(loaded_state, tmp_path):
    store = SnapshotStore(tmp_path / "state.sqlite")
    store.save(loaded_state, seed=1, warehouses=1)
    small = WorldState()
    write_entities(small, [make_customer(1, "BARBARBAR")])
    store.save(small, seed=2, warehouses=1)

    restored, meta = store.load()
    assert meta.seed == 2
    assert len(restored) == len(small) == 2
    assert restored.state_hash() == small.state_hash()
