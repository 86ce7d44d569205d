import numpy as np
import pytest

from src.entities import EntityType
from src.exceptions import KeyEncodingError
from src.keys import (
    DESCRIPTORS,
    SEPARATOR,
    CompositeKey,
    check_scale_capacity,
    customer_last_name_key,
    district_key,
    flip_order_id,
    history_key,
    make_key,
    order_key,
    printable,
    type_of,
    warehouse_key,
)


def test_padded_ids_sort_numerically():
    assert make_key("ENTITY", [2], 2).serialize() < make_key("ENTITY", [11], 2).serialize()
    keys = [make_key("ENTITY", [i], 4).serialize() for i in range(1, 1001)]
    shuffled = list(reversed(keys))
    assert sorted(shuffled) == keys


def test_randomized_key_order_matches_numeric_order():
    rng = np.random.default_rng(1)
    pairs = rng.integers(0, 10 ** 6, size=(10_000, 2))
    for a, b in pairs.tolist():
        key_a = make_key("ORDER", [1, a], [6, 6]).serialize()
        key_b = make_key("ORDER", [1, b], [6, 6]).serialize()
        assert (key_a < key_b) == (a < b)


def test_identical_inputs_give_identical_keys():
    assert district_key(3, 7) == district_key(3, 7)
    assert district_key(3, 7).serialize() == district_key(3, 7).serialize()


def test_component_overflow_is_rejected():
    with pytest.raises(KeyEncodingError):
        make_key("ENTITY", [100], 2)
    with pytest.raises(KeyEncodingError):
        make_key("ENTITY", [-1], 2)
    with pytest.raises(KeyEncodingError):
        make_key("ENTITY", ["a" + SEPARATOR + "b"], [None])


def test_flip_order_id():
    assert flip_order_id(1, 4) == 9998
    for o_id in (0, 1, 17, 3000, 999_999):
        assert flip_order_id(flip_order_id(o_id)) == o_id
    with pytest.raises(KeyEncodingError):
        flip_order_id(10_000, 4)


def test_newest_order_sorts_first():
    keys = sorted(order_key(1, 1, o_id).serialize() for o_id in range(1, 51))
    first = CompositeKey.parse(keys[0])
    assert int(first.parts[-1]) == flip_order_id(50)
    assert order_key(1, 1, 5).serialize() < order_key(1, 1, 4).serialize()


def test_partial_key_range_covers_only_its_prefix():
    start, end = DESCRIPTORS[EntityType.DISTRICT].key(1).range_bounds()
    assert start <= district_key(1, 10).serialize() < end
    assert not start <= district_key(10, 1).serialize() < end
    assert not start <= warehouse_key(1).serialize() < end


def test_history_keys_tie_break_on_client_id():
    first = history_key((1, 2, 3), 500, "t1").serialize()
    second = history_key((1, 2, 3), 500, "t2").serialize()
    later = history_key((1, 2, 3), 600, "t1").serialize()
    assert len({first, second, later}) == 3


def test_last_name_partial_key_prefixes_full_keys():
    start, end = customer_last_name_key(1, 1, "BARBAR").range_bounds()
    assert start <= customer_last_name_key(1, 1, "BARBAR", 42).serialize() < end
    assert not start <= customer_last_name_key(1, 1, "BARBARA", 42).serialize() < end


def test_key_rendering_helpers():
    raw = warehouse_key(1).serialize()
    assert type_of(raw) == "WAREHOUSE"
    assert printable(raw) == "WAREHOUSE_000001"
    assert str(CompositeKey.parse(raw)) == "WAREHOUSE_000001"
    with pytest.raises(KeyEncodingError):
        CompositeKey.parse("WAREHOUSE")


def test_scale_capacity_checks_pad_widths():
    check_scale_capacity(warehouses=1, items=100_000, customers_per_district=3_000)
    with pytest.raises(KeyEncodingError):
        check_scale_capacity(warehouses=10 ** 6, items=10, customers_per_district=10)
