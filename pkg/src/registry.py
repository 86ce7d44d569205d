"""
Asset registries: CRUD access to TPC-C entities over the key-value state.

Each registry knows the key structure of one entity type and performs every
access through a LedgerAccess, so all reads and writes of a transaction land in
its read-write set. The customer registry also maintains the last-name
secondary index.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Generic, Iterator, List, Optional, Type, TypeVar

from .entities import (
    ENTITY_CLASSES,
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
    decode_entity,
)
from .exceptions import AlreadyExistsError, NotFoundError
from .keys import (
    CUSTOMER_LAST_NAME_PREFIX,
    DESCRIPTORS,
    CompositeKey,
    RegistryDescriptor,
    customer_last_name_key,
    printable,
)
from .ledger_access import LedgerAccess
from .world_state import WorldState

logger = logging.getLogger(__name__)

E = TypeVar("E", bound=Entity)


class Registry(Generic[E]):
    """CRUD operations for one entity type."""

    def __init__(self, access: LedgerAccess, entity_type: EntityType):
        self.access = access
        self.descriptor: RegistryDescriptor = DESCRIPTORS[entity_type]
        self.entity_class: Type[E] = ENTITY_CLASSES[entity_type]

    def key(self, *values) -> CompositeKey:
        return self.descriptor.key(*values)

    def create(self, entity: E) -> None:
        """
        Store a new entity.

        Raises:
            AlreadyExistsError: If an entity with the same key exists
        """
        key = self.descriptor.key_of(entity).serialize()
        if self.access.get(key) is not None:
            raise AlreadyExistsError(f"{self.descriptor.entity_type.value} already exists", printable(key))
        self.access.put(key, entity.to_value())

    def find(self, *key_values) -> Optional[E]:
        raw = self.access.get(self.key(*key_values).serialize())
        if raw is None:
            return None
        return self.entity_class.from_value(raw)

    def read(self, *key_values) -> E:
        """
        Read an entity by its full primary key.

        Raises:
            NotFoundError: If no entity is stored under the key
        """
        entity = self.find(*key_values)
        if entity is None:
            key = self.key(*key_values).serialize()
            raise NotFoundError(f"{self.descriptor.entity_type.value} not found", printable(key))
        return entity

    def update(self, entity: E) -> None:
        key = self.descriptor.key_of(entity).serialize()
        if self.access.get(key) is None:
            raise NotFoundError(f"Cannot update missing {self.descriptor.entity_type.value}", printable(key))
        self.access.put(key, entity.to_value())

    def delete(self, *key_values) -> None:
        key = self.key(*key_values).serialize()
        if self.access.get(key) is None:
            raise NotFoundError(f"Cannot delete missing {self.descriptor.entity_type.value}", printable(key))
        self.access.delete(key)

    def iter_range(self, *partial, reverse: bool = False) -> Iterator[E]:
        """Lazily iterate the entities under a partial key in key order."""
        start, end = self.key(*partial).range_bounds()
        for _, raw in self.access.scan(start, end, reverse=reverse):
            yield self.entity_class.from_value(raw)

    def read_range(self, *partial, limit: Optional[int] = None, reverse: bool = False) -> List[E]:
        """
        Read at most `limit` entities under a partial key.

        Only the consumed prefix of the range is recorded in the read set.

        Args:
            *partial: Leading primary-key values
            limit: Maximum number of entities (None for all)
            reverse: Iterate in descending key order

        Returns:
            List[E]: Entities in key order
        """
        if limit is not None and limit <= 0:
            return []
        result = []
        for entity in self.iter_range(*partial, reverse=reverse):
            result.append(entity)
            if limit is not None and len(result) >= limit:
                break
        return result

    def read_between(self, low: tuple, high: tuple) -> List[E]:
        """Entities whose keys lie between the full/partial keys low and high (both inclusive)."""
        start = self.key(*low).serialize()
        end = self.key(*high).range_bounds()[1]
        if start >= end:
            return []
        return [self.entity_class.from_value(raw) for _, raw in self.access.scan(start, end)]


class CustomerRegistry(Registry[Customer]):
    """Customer registry maintaining the (w, d, c_last, c_id) secondary index."""

    def __init__(self, access: LedgerAccess):
        super().__init__(access, EntityType.CUSTOMER)

    def create(self, entity: Customer) -> None:
        super().create(entity)
        index_key = customer_last_name_key(entity.c_w_id, entity.c_d_id, entity.c_last, entity.c_id)
        self.access.put(index_key.serialize(), b"")

    def ids_by_last_name(self, w_id: int, d_id: int, c_last: str) -> List[int]:
        """Customer ids sharing a last name, ascending."""
        start, end = customer_last_name_key(w_id, d_id, c_last).range_bounds()
        return [int(CompositeKey.parse(key).parts[-1]) for key, _ in self.access.scan(start, end)]

    def by_last_name(self, w_id: int, d_id: int, c_last: str) -> List[Customer]:
        """Matching customers sorted by first name."""
        customers = [self.read(w_id, d_id, c_id) for c_id in self.ids_by_last_name(w_id, d_id, c_last)]
        customers.sort(key=lambda customer: customer.c_first)
        return customers

    def select_by_last_name(self, w_id: int, d_id: int, c_last: str) -> Customer:
        """
        Pick the customer at position ceil(n/2) of the first-name ordered matches.

        Raises:
            NotFoundError: If no customer has that last name
        """
        matches = self.by_last_name(w_id, d_id, c_last)
        if not matches:
            key = customer_last_name_key(w_id, d_id, c_last).serialize()
            raise NotFoundError(f"No customer with last name {c_last}", printable(key))
        return matches[(len(matches) + 1) // 2 - 1]


class TpccRegistries:
    """All registries bound to one endorsement context."""

    def __init__(self, access: LedgerAccess):
        self.access = access
        self.warehouses: Registry[Warehouse] = Registry(access, EntityType.WAREHOUSE)
        self.districts: Registry[District] = Registry(access, EntityType.DISTRICT)
        self.customers = CustomerRegistry(access)
        self.history: Registry[History] = Registry(access, EntityType.HISTORY)
        self.new_orders: Registry[NewOrder] = Registry(access, EntityType.NEW_ORDER)
        self.orders: Registry[Order] = Registry(access, EntityType.ORDER)
        self.order_lines: Registry[OrderLine] = Registry(access, EntityType.ORDER_LINE)
        self.items: Registry[Item] = Registry(access, EntityType.ITEM)
        self.stocks: Registry[Stock] = Registry(access, EntityType.STOCK)
        self._by_type: Dict[EntityType, Registry] = {
            EntityType.WAREHOUSE: self.warehouses,
            EntityType.DISTRICT: self.districts,
            EntityType.CUSTOMER: self.customers,
            EntityType.HISTORY: self.history,
            EntityType.NEW_ORDER: self.new_orders,
            EntityType.ORDER: self.orders,
            EntityType.ORDER_LINE: self.order_lines,
            EntityType.ITEM: self.items,
            EntityType.STOCK: self.stocks,
        }

    def for_type(self, entity_type: EntityType) -> Registry:
        return self._by_type[EntityType(entity_type)]

    def create(self, entity: Entity) -> None:
        self.for_type(entity.TYPE).create(entity)


@dataclass
class AuditReport:
    """Outcome of a full-scan consistency check."""

    counts: Dict[str, int] = field(default_factory=dict)
    problems: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems


def audit_state(state: WorldState, max_problems: int = 100) -> AuditReport:
    """
    Check the committed state for structural consistency.

    Verifies that every entity sits under its own primary key, that the last-name
    index matches the customers, that every order has o_ol_cnt lines, that a
    NewOrder row exists iff its order is undelivered, and that every district's
    d_next_o_id is one past its newest order.

    Args:
        state: Committed world state
        max_problems: Stop collecting after this many problems

    Returns:
        AuditReport: Entity counts and the problems found
    """
    report = AuditReport()

    def problem(message: str) -> None:
        if len(report.problems) < max_problems:
            report.problems.append(message)

    customer_names: Dict[tuple, str] = {}
    indexed = set()
    line_counts: Counter = Counter()
    new_order_ids = set()
    orders: Dict[tuple, Order] = {}
    newest_order: Dict[tuple, int] = {}
    next_ids: Dict[tuple, int] = {}

    for raw_key, entry in state.items():
        parsed = CompositeKey.parse(raw_key)
        report.counts[parsed.type_prefix] = report.counts.get(parsed.type_prefix, 0) + 1
        if parsed.type_prefix == CUSTOMER_LAST_NAME_PREFIX:
            w_id, d_id, c_last, c_id = parsed.parts
            indexed.add((int(w_id), int(d_id), int(c_id), c_last))
            continue
        try:
            entity_type = EntityType(parsed.type_prefix)
        except ValueError:
            problem(f"Unknown key type {parsed.type_prefix!r}")
            continue
        entity = decode_entity(entity_type, entry.value)
        if DESCRIPTORS[entity_type].key_of(entity).serialize() != raw_key:
            problem(f"{printable(raw_key)} holds an entity with a different primary key")
        if isinstance(entity, Customer):
            customer_names[(entity.c_w_id, entity.c_d_id, entity.c_id)] = entity.c_last
        elif isinstance(entity, OrderLine):
            line_counts[(entity.ol_w_id, entity.ol_d_id, entity.ol_o_id)] += 1
        elif isinstance(entity, NewOrder):
            new_order_ids.add((entity.no_w_id, entity.no_d_id, entity.no_o_id))
        elif isinstance(entity, Order):
            district = (entity.o_w_id, entity.o_d_id)
            orders[district + (entity.o_id,)] = entity
            newest_order[district] = max(newest_order.get(district, 0), entity.o_id)
        elif isinstance(entity, District):
            next_ids[(entity.d_w_id, entity.d_id)] = entity.d_next_o_id

    expected_index = {ids + (last,) for ids, last in customer_names.items()}
    for missing in sorted(expected_index - indexed)[:max_problems]:
        problem(f"Customer {missing[:3]} missing from the last-name index")
    for dangling in sorted(indexed - expected_index)[:max_problems]:
        problem(f"Last-name index entry {dangling} has no matching customer")

    for order_ref, order in orders.items():
        if line_counts.get(order_ref, 0) != order.o_ol_cnt:
            problem(f"Order {order_ref} has {line_counts.get(order_ref, 0)} lines, expected {order.o_ol_cnt}")
        undelivered = order.o_carrier_id is None
        present = order_ref in new_order_ids
        if undelivered != present:
            problem(f"Order {order_ref} undelivered={undelivered} but NewOrder row present={present}")
    for order_ref in new_order_ids - orders.keys():
        problem(f"NewOrder {order_ref} has no order")
    for district, next_o_id in next_ids.items():
        if district in newest_order and next_o_id != newest_order[district] + 1:
            problem(f"District {district} next order id {next_o_id}, newest order {newest_order[district]}")

    if report.problems:
        logger.warning("State audit found %d problem(s)", len(report.problems))
    return report
