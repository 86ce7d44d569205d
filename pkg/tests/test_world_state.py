from src.entities import EntityType
from src.keys import DESCRIPTORS, item_key, warehouse_key
from src.world_state import Version, WorldState


def _filled(*ids) -> WorldState:
    state = WorldState()
    for number, w_id in enumerate(ids):
        state.put(warehouse_key(w_id).serialize(), f"w{w_id}".encode(), Version(0, number))
    return state


def test_put_get_and_versions():
    state = _filled(1)
    key = warehouse_key(1).serialize()
    assert state.get(key).value == b"w1"
    assert state.version_of(key) == Version(0, 0)
    state.put(key, b"changed", Version(3, 2))
    assert state.get(key).value == b"changed"
    assert state.version_of(key) == Version(3, 2)
    assert state.version_of(warehouse_key(2).serialize()) is None
    assert len(state) == 1


def test_scan_is_ordered_and_half_open():
    state = _filled(5, 3, 9, 1)
    start, end = DESCRIPTORS[EntityType.WAREHOUSE].key().range_bounds()
    assert [v.value for _, v in state.scan(start, end)] == [b"w1", b"w3", b"w5", b"w9"]
    assert [v.value for _, v in state.scan(start, end, reverse=True)] == [b"w9", b"w5", b"w3", b"w1"]
    upper = warehouse_key(5).serialize()
    assert state.keys_between(start, upper) == [warehouse_key(1).serialize(), warehouse_key(3).serialize()]


def test_scan_of_missing_type_is_empty():
    state = _filled(1)
    start, end = item_key(1).range_bounds()
    assert list(state.scan(start, end)) == []


def test_delete_removes_from_index():
    state = _filled(1, 2, 3)
    state.delete(warehouse_key(2).serialize())
    state.delete(warehouse_key(7).serialize())
    start, end = DESCRIPTORS[EntityType.WAREHOUSE].key().range_bounds()
    assert [v.value for _, v in state.scan(start, end)] == [b"w1", b"w3"]
    assert state.count("WAREHOUSE") == 2
    assert warehouse_key(2).serialize() not in state


def test_hash_ignores_versions_unless_asked():
    first = _filled(1, 2)
    second = WorldState()
    second.put(warehouse_key(2).serialize(), b"w2", Version(7, 0))
    second.put(warehouse_key(1).serialize(), b"w1", Version(8, 1))
    assert first.state_hash() == second.state_hash()
    assert first.state_hash(include_versions=True) != second.state_hash(include_versions=True)
    second.put(warehouse_key(1).serialize(), b"other", Version(9, 0))
    assert first.state_hash() != second.state_hash()


def test_copy_is_independent():
    state = _filled(1, 2)
    state.height = 4
    clone = state.copy()
    clone.put(warehouse_key(3).serialize(), b"w3", Version(4, 0))
    clone.delete(warehouse_key(1).serialize())
    assert len(state) == 2 and len(clone) == 2
    assert clone.height == 4
    assert warehouse_key(1).serialize() in state
    assert state.type_names() == ["WAREHOUSE"]
