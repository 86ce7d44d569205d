"""
Initial TPC-C population.

Streams every entity of the initial database at TPC-C cardinalities (optionally
divided by a scale factor for desk runs). The stream is a pure function of
(seed, warehouse count, scale, load constants): identical inputs yield an
identical sequence of entities.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterator, Optional, Tuple

from .entities import (
    BASIS_POINTS,
    CENTS,
    DISTRICTS_PER_WAREHOUSE,
    STOCK_DIST_COUNT,
    Customer,
    District,
    Entity,
    EntityType,
    History,
    Item,
    NewOrder,
    Order,
    OrderLine,
    Stock,
    Warehouse,
)
from .random_gen import (
    NURAND_A_LAST,
    NURandConstants,
    RandomSource,
    make_last_name,
    nurand,
)

logger = logging.getLogger(__name__)

MIN_ITEMS = 100
MIN_CUSTOMERS = 10
MIN_ORDERS = 10


@dataclass(frozen=True)
class ScaleParameters:
    """Cardinalities of the generated database."""

    warehouses: int
    items: int = 100_000
    districts_per_warehouse: int = DISTRICTS_PER_WAREHOUSE
    customers_per_district: int = 3_000
    orders_per_district: int = 3_000
    new_orders_per_district: int = 900

    @classmethod
    def make(cls, warehouses: int, scale_factor: float = 1.0) -> "ScaleParameters":
        """
        Build scale parameters, dividing the per-warehouse cardinalities by scale_factor.

        Args:
            warehouses: Number of warehouses (>= 0)
            scale_factor: Divisor for items, customers and orders (1.0 = full TPC-C)

        Returns:
            ScaleParameters: The resulting cardinalities
        """
        if warehouses < 0:
            raise ValueError(f"warehouses must be >= 0, got {warehouses}")
        if scale_factor < 1.0:
            raise ValueError(f"scale_factor must be >= 1.0, got {scale_factor}")
        customers = max(MIN_CUSTOMERS, int(3_000 / scale_factor))
        orders = max(MIN_ORDERS, int(3_000 / scale_factor))
        return cls(
            warehouses=warehouses,
            items=max(MIN_ITEMS, int(100_000 / scale_factor)),
            customers_per_district=customers,
            orders_per_district=orders,
            new_orders_per_district=max(1, int(orders * 0.3)),
        )

    @property
    def first_new_order_id(self) -> int:
        """Lowest order id that is still undelivered after the load."""
        return self.orders_per_district - self.new_orders_per_district + 1

    def expected_counts(self) -> Dict[EntityType, int]:
        """Exact entity counts of the load (order lines excepted, their count is random)."""
        w = self.warehouses
        districts = w * self.districts_per_warehouse
        return {
            EntityType.ITEM: self.items if w > 0 else 0,
            EntityType.WAREHOUSE: w,
            EntityType.STOCK: w * self.items,
            EntityType.DISTRICT: districts,
            EntityType.CUSTOMER: districts * self.customers_per_district,
            EntityType.HISTORY: districts * self.customers_per_district,
            EntityType.ORDER: districts * self.orders_per_district,
            EntityType.NEW_ORDER: districts * self.new_orders_per_district,
        }


def _make_address(rng: RandomSource) -> Tuple[str, str, str, str, str]:
    return (
        rng.astring(10, 20),
        rng.astring(10, 20),
        rng.astring(10, 20),
        rng.astring(2, 2).upper(),
        rng.zip_code(),
    )


def generate_item(rng: RandomSource, i_id: int) -> Item:
    data = rng.astring(26, 50)
    if rng.number(1, 10) == 1:
        data = rng.with_original(data)
    return Item(
        i_id=i_id,
        i_im_id=rng.number(1, 10_000),
        i_name=rng.astring(14, 24),
        i_price=rng.number(1 * CENTS, 100 * CENTS),
        i_data=data,
    )


def generate_warehouse(rng: RandomSource, w_id: int) -> Warehouse:
    street_1, street_2, city, state, zip_code = _make_address(rng)
    return Warehouse(
        w_id=w_id,
        w_name=rng.astring(6, 10),
        w_street_1=street_1,
        w_street_2=street_2,
        w_city=city,
        w_state=state,
        w_zip=zip_code,
        w_tax=rng.number(0, BASIS_POINTS // 5),
        w_ytd=300_000 * CENTS,
    )


def generate_stock(rng: RandomSource, w_id: int, i_id: int) -> Stock:
    data = rng.astring(26, 50)
    if rng.number(1, 10) == 1:
        data = rng.with_original(data)
    return Stock(
        s_i_id=i_id,
        s_w_id=w_id,
        s_quantity=rng.number(10, 100),
        s_dist=[rng.astring(24, 24) for _ in range(STOCK_DIST_COUNT)],
        s_ytd=0,
        s_order_cnt=0,
        s_remote_cnt=0,
        s_data=data,
    )


def generate_district(rng: RandomSource, w_id: int, d_id: int, next_o_id: int) -> District:
    street_1, street_2, city, state, zip_code = _make_address(rng)
    return District(
        d_id=d_id,
        d_w_id=w_id,
        d_name=rng.astring(6, 10),
        d_street_1=street_1,
        d_street_2=street_2,
        d_city=city,
        d_state=state,
        d_zip=zip_code,
        d_tax=rng.number(0, BASIS_POINTS // 5),
        d_ytd=30_000 * CENTS,
        d_next_o_id=next_o_id,
    )


def generate_customer(rng: RandomSource, w_id: int, d_id: int, c_id: int,
                      c_last_constant: int, since: int) -> Customer:
    if c_id <= 1000:
        last = make_last_name(c_id - 1)
    else:
        last = make_last_name(nurand(NURAND_A_LAST, 0, 999, c_last_constant, rng))
    street_1, street_2, city, state, zip_code = _make_address(rng)
    return Customer(
        c_id=c_id,
        c_d_id=d_id,
        c_w_id=w_id,
        c_first=rng.astring(8, 16),
        c_middle="OE",
        c_last=last,
        c_street_1=street_1,
        c_street_2=street_2,
        c_city=city,
        c_state=state,
        c_zip=zip_code,
        c_phone=rng.nstring(16, 16),
        c_since=since,
        c_credit="BC" if rng.number(1, 10) == 1 else "GC",
        c_credit_lim=50_000 * CENTS,
        c_discount=rng.number(0, BASIS_POINTS // 2),
        c_balance=-10 * CENTS,
        c_ytd_payment=10 * CENTS,
        c_payment_cnt=1,
        c_delivery_cnt=0,
        c_data=rng.astring(300, 500),
    )


def generate_history(rng: RandomSource, w_id: int, d_id: int, c_id: int, date: int) -> History:
    return History(
        h_c_id=c_id,
        h_c_d_id=d_id,
        h_c_w_id=w_id,
        h_d_id=d_id,
        h_w_id=w_id,
        h_date=date,
        h_amount=10 * CENTS,
        h_data=rng.astring(12, 24),
        h_client_id="load",
    )


def generate_order(rng: RandomSource, scale: ScaleParameters, w_id: int, d_id: int,
                   o_id: int, c_id: int, entry_date: int) -> Tuple[Order, list]:
    """Generate an order with its order lines."""
    delivered = o_id < scale.first_new_order_id
    ol_cnt = rng.number(5, 15)
    order = Order(
        o_id=o_id,
        o_d_id=d_id,
        o_w_id=w_id,
        o_c_id=c_id,
        o_entry_d=entry_date,
        o_carrier_id=rng.number(1, 10) if delivered else None,
        o_ol_cnt=ol_cnt,
        o_all_local=1,
    )
    lines = []
    for ol_number in range(1, ol_cnt + 1):
        lines.append(OrderLine(
            ol_o_id=o_id,
            ol_d_id=d_id,
            ol_w_id=w_id,
            ol_number=ol_number,
            ol_i_id=rng.number(1, scale.items),
            ol_supply_w_id=w_id,
            ol_delivery_d=entry_date if delivered else None,
            ol_quantity=5,
            ol_amount=0 if delivered else rng.number(1, 999_999),
            ol_dist_info=rng.astring(24, 24),
        ))
    return order, lines


def generate_initial_population(warehouse_count: int, seed: int,
                                scale: Optional[ScaleParameters] = None,
                                constants: Optional[NURandConstants] = None,
                                load_time: int = 0) -> Iterator[Tuple[EntityType, Entity]]:
    """
    Stream the initial database as (entity type, entity) pairs.

    Items come first, then per warehouse: the warehouse, its stock, and per district
    the district, its customers with their history rows, and its orders with their
    order lines and new-order rows.

    Args:
        warehouse_count: Number of warehouses
        seed: Generator seed
        scale: Cardinalities (full TPC-C when omitted)
        constants: Load-time NURand constants (derived from the seed when omitted)
        load_time: Virtual timestamp stamped on dates in the generated data

    Returns:
        Iterator[Tuple[EntityType, Entity]]: The entity stream
    """
    if warehouse_count < 0:
        raise ValueError(f"warehouse_count must be >= 0, got {warehouse_count}")
    if scale is None:
        scale = ScaleParameters.make(warehouse_count)
    elif scale.warehouses != warehouse_count:
        raise ValueError(
            f"Scale parameters describe {scale.warehouses} warehouses, not {warehouse_count}"
        )
    rng = RandomSource(seed)
    if constants is None:
        constants = NURandConstants.for_load(rng)
    if warehouse_count == 0:
        return

    logger.info("Generating population for %d warehouse(s), %d items", warehouse_count, scale.items)
    for i_id in range(1, scale.items + 1):
        yield EntityType.ITEM, generate_item(rng, i_id)

    for w_id in range(1, warehouse_count + 1):
        yield EntityType.WAREHOUSE, generate_warehouse(rng, w_id)
        for i_id in range(1, scale.items + 1):
            yield EntityType.STOCK, generate_stock(rng, w_id, i_id)

        for d_id in range(1, scale.districts_per_warehouse + 1):
            yield EntityType.DISTRICT, generate_district(
                rng, w_id, d_id, scale.orders_per_district + 1
            )
            for c_id in range(1, scale.customers_per_district + 1):
                yield EntityType.CUSTOMER, generate_customer(
                    rng, w_id, d_id, c_id, constants.c_last, load_time
                )
                yield EntityType.HISTORY, generate_history(rng, w_id, d_id, c_id, load_time)

            customer_ids = rng.permutation(scale.customers_per_district)
            for o_id in range(1, scale.orders_per_district + 1):
                c_id = customer_ids[(o_id - 1) % len(customer_ids)]
                order, lines = generate_order(rng, scale, w_id, d_id, o_id, c_id, load_time)
                yield EntityType.ORDER, order
                for line in lines:
                    yield EntityType.ORDER_LINE, line
                if o_id >= scale.first_new_order_id:
                    yield EntityType.NEW_ORDER, NewOrder(no_o_id=o_id, no_d_id=d_id, no_w_id=w_id)


def count_population(stream) -> Dict[EntityType, int]:
    """Count entities per type in a population stream."""
    counts = {entity_type: 0 for entity_type in EntityType}
    for entity_type, _ in stream:
        counts[entity_type] += 1
    return counts
