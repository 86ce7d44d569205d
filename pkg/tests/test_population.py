import pytest

from src.entities import EntityType
from src.population import ScaleParameters, count_population, generate_initial_population


def test_full_scale_parameters():
    scale = ScaleParameters.make(2)
    assert scale.items == 100_000
    assert scale.customers_per_district == 3_000
    assert scale.first_new_order_id == 2_101
    counts = scale.expected_counts()
    assert counts[EntityType.STOCK] == 200_000
    assert counts[EntityType.CUSTOMER] == 60_000
    assert counts[EntityType.NEW_ORDER] == 18_000


def test_small_scale_parameters():
    scale = ScaleParameters.make(1, 300.0)
    assert scale.items == 333
    assert scale.customers_per_district == 10
    assert scale.orders_per_district == 10
    assert scale.new_orders_per_district == 3
    assert scale.first_new_order_id == 8


def test_invalid_scale():
    with pytest.raises(ValueError):
        ScaleParameters.make(1, 0.5)
    with pytest.raises(ValueError):
        ScaleParameters.make(-1)
    with pytest.raises(ValueError):
        list(generate_initial_population(2, seed=1, scale=ScaleParameters.make(1)))


def test_small_population_counts():
    scale = ScaleParameters.make(2, 300.0)
    counts = count_population(generate_initial_population(2, seed=3, scale=scale))
    for entity_type, expected in scale.expected_counts().items():
        assert counts[entity_type] == expected, entity_type
    orders = counts[EntityType.ORDER]
    assert 5 * orders <= counts[EntityType.ORDER_LINE] <= 15 * orders


def test_zero_warehouses_is_empty():
    assert list(generate_initial_population(0, seed=1)) == []


def test_stream_is_deterministic():
    scale = ScaleParameters.make(1, 300.0)
    first = [entity.to_value() for _, entity in generate_initial_population(1, 5, scale)]
    second = [entity.to_value() for _, entity in generate_initial_population(1, 5, scale)]
    other = [entity.to_value() for _, entity in generate_initial_population(1, 6, scale)]
    assert first == second
    assert first != other


def test_undelivered_orders_have_new_order_rows():
    scale = ScaleParameters.make(1, 300.0)
    undelivered, new_orders = set(), set()
    for entity_type, entity in generate_initial_population(1, 5, scale):
        if entity_type is EntityType.ORDER and entity.o_carrier_id is None:
            undelivered.add((entity.o_d_id, entity.o_id))
        elif entity_type is EntityType.NEW_ORDER:
            new_orders.add((entity.no_d_id, entity.no_o_id))
    assert undelivered == new_orders
    assert {o_id for _, o_id in new_orders} == {8, 9, 10}


@pytest.mark.slow
def test_full_warehouse_counts():
    counts = count_population(generate_initial_population(1, seed=1))
    assert counts[EntityType.DISTRICT] == 10
    assert counts[EntityType.CUSTOMER] == 30_000
    assert counts[EntityType.NEW_ORDER] == 9_000
    assert counts[EntityType.STOCK] == 100_000
    without_items = sum(n for entity_type, n in counts.items() if entity_type is not EntityType.ITEM)
    assert without_items == pytest.approx(500_000, rel=0.05)
