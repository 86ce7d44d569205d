"""
TPC-C entity types and their canonical value encoding.

Money is stored as integer cents and rates as integer basis points, timestamps
as integer ticks of the simulation clock. Values are encoded as compact JSON
objects whose fields appear in declaration order, so equal entities always
serialize to equal bytes.
"""

import enum
import json
from dataclasses import dataclass, field, fields
from typing import ClassVar, Dict, List, Optional, Tuple, Type, TypeVar

E = TypeVar("E", bound="Entity")

CENTS = 100
BASIS_POINTS = 10_000

DISTRICTS_PER_WAREHOUSE = 10
STOCK_DIST_COUNT = 10


class EntityType(str, enum.Enum):
    """The nine TPC-C tables; the value doubles as the key-space prefix."""
    WAREHOUSE = "WAREHOUSE"
    DISTRICT = "DISTRICT"
    CUSTOMER = "CUSTOMER"
    HISTORY = "HISTORY"
    NEW_ORDER = "NEW_ORDER"
    ORDER = "ORDER"
    ORDER_LINE = "ORDER_LINE"
    ITEM = "ITEM"
    STOCK = "STOCK"


_FIELD_NAMES: Dict[type, Tuple[str, ...]] = {}


class Entity:
    """Mixin providing the canonical record codec."""

    __slots__ = ()

    TYPE: ClassVar[EntityType]

    @classmethod
    def field_names(cls) -> Tuple[str, ...]:
        names = _FIELD_NAMES.get(cls)
        if names is None:
            names = tuple(f.name for f in fields(cls))
            _FIELD_NAMES[cls] = names
        return names

    def to_record(self) -> dict:
        return {name: getattr(self, name) for name in self.field_names()}

    def to_value(self) -> bytes:
        """Canonical bytes stored in the world state."""
        return json.dumps(self.to_record(), separators=(",", ":"), ensure_ascii=False).encode("utf-8")

    @classmethod
    def from_value(cls: Type[E], raw) -> E:
        record = json.loads(raw)
        return cls(**record)


@dataclass(slots=True)
class Warehouse(Entity):
    TYPE: ClassVar[EntityType] = EntityType.WAREHOUSE

    w_id: int
    w_name: str
    w_street_1: str
    w_street_2: str
    w_city: str
    w_state: str
    w_zip: str
    w_tax: int
    w_ytd: int


@dataclass(slots=True)
class District(Entity):
    TYPE: ClassVar[EntityType] = EntityType.DISTRICT

    d_id: int
    d_w_id: int
    d_name: str
    d_street_1: str
    d_street_2: str
    d_city: str
    d_state: str
    d_zip: str
    d_tax: int
    d_ytd: int
    d_next_o_id: int


@dataclass(slots=True)
class Customer(Entity):
    TYPE: ClassVar[EntityType] = EntityType.CUSTOMER

    c_id: int
    c_d_id: int
    c_w_id: int
    c_first: str
    c_middle: str
    c_last: str
    c_street_1: str
    c_street_2: str
    c_city: str
    c_state: str
    c_zip: str
    c_phone: str
    c_since: int
    c_credit: str
    c_credit_lim: int
    c_discount: int
    c_balance: int
    c_ytd_payment: int
    c_payment_cnt: int
    c_delivery_cnt: int
    c_data: str


@dataclass(slots=True)
class History(Entity):
    TYPE: ClassVar[EntityType] = EntityType.HISTORY

    h_c_id: int
    h_c_d_id: int
    h_c_w_id: int
    h_d_id: int
    h_w_id: int
    h_date: int
    h_amount: int
    h_data: str
    # Submitting client; part of the key only because TPC-C gives history no primary key.
    h_client_id: str


@dataclass(slots=True)
class NewOrder(Entity):
    TYPE: ClassVar[EntityType] = EntityType.NEW_ORDER

    no_o_id: int
    no_d_id: int
    no_w_id: int


@dataclass(slots=True)
class Order(Entity):
    TYPE: ClassVar[EntityType] = EntityType.ORDER

    o_id: int
    o_d_id: int
    o_w_id: int
    o_c_id: int
    o_entry_d: int
    o_carrier_id: Optional[int]
    o_ol_cnt: int
    o_all_local: int


@dataclass(slots=True)
class OrderLine(Entity):
    TYPE: ClassVar[EntityType] = EntityType.ORDER_LINE

    ol_o_id: int
    ol_d_id: int
    ol_w_id: int
    ol_number: int
    ol_i_id: int
    ol_supply_w_id: int
    ol_delivery_d: Optional[int]
    ol_quantity: int
    ol_amount: int
    ol_dist_info: str


@dataclass(slots=True)
class Item(Entity):
    TYPE: ClassVar[EntityType] = EntityType.ITEM

    i_id: int
    i_im_id: int
    i_name: str
    i_price: int
    i_data: str


@dataclass(slots=True)
class Stock(Entity):
    TYPE: ClassVar[EntityType] = EntityType.STOCK

    s_i_id: int
    s_w_id: int
    s_quantity: int
    s_dist: List[str] = field(default_factory=list)
    s_ytd: int = 0
    s_order_cnt: int = 0
    s_remote_cnt: int = 0
    s_data: str = ""


ENTITY_CLASSES: Dict[EntityType, Type[Entity]] = {
    EntityType.WAREHOUSE: Warehouse,
    EntityType.DISTRICT: District,
    EntityType.CUSTOMER: Customer,
    EntityType.HISTORY: History,
    EntityType.NEW_ORDER: NewOrder,
    EntityType.ORDER: Order,
    EntityType.ORDER_LINE: OrderLine,
    EntityType.ITEM: Item,
    EntityType.STOCK: Stock,
}


def decode_entity(entity_type: EntityType, raw) -> Entity:
    """Decode a stored value of the given type."""
    return ENTITY_CLASSES[EntityType(entity_type)].from_value(raw)
