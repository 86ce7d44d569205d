"""
Transaction profile inputs.

Typed argument records for the five TPC-C profiles (and the load function),
their string marshaling at the contract boundary, and the TPC-C rules for
generating them.
"""

import enum
import json
import typing
from dataclasses import dataclass, field, fields
from typing import ClassVar, List, NamedTuple, Optional, Sequence, Tuple, Type, TypeVar

from .entities import DISTRICTS_PER_WAREHOUSE, ENTITY_CLASSES, Entity, EntityType
from .exceptions import MarshalError
from .population import ScaleParameters
from .random_gen import (
    NURAND_A_C_ID,
    NURAND_A_ITEM,
    NURandConstants,
    RandomSource,
    nurand,
    random_last_name,
)

A = TypeVar("A", bound="ProfileArgs")

LOAD_FUNCTION = "LoadEntities"


class ProfileType(str, enum.Enum):
    """The five TPC-C profiles; values are the contract function names."""
    NEW_ORDER = "NewOrder"
    PAYMENT = "Payment"
    ORDER_STATUS = "OrderStatus"
    DELIVERY = "Delivery"
    STOCK_LEVEL = "StockLevel"

    @property
    def read_only(self) -> bool:
        return self in (ProfileType.ORDER_STATUS, ProfileType.STOCK_LEVEL)


def _matches(value, expected) -> bool:
    origin = typing.get_origin(expected)
    if origin is typing.Union:
        return any(_matches(value, option) for option in typing.get_args(expected))
    if expected is type(None):
        return value is None
    if expected is int:
        return isinstance(value, int) and not isinstance(value, bool)
    if origin in (list, List):
        return isinstance(value, list)
    if isinstance(expected, type):
        return isinstance(value, expected)
    return True


class ProfileArgs:
    """Positional string marshaling shared by all argument records."""

    FUNCTION: ClassVar[str]

    def to_args(self) -> List[str]:
        """One JSON-encoded string per field, in declaration order."""
        return [json.dumps(self._encode(getattr(self, f.name)), separators=(",", ":"))
                for f in fields(self)]

    @staticmethod
    def _encode(value):
        return value

    @classmethod
    def from_args(cls: Type[A], args: Sequence[str]) -> A:
        """
        Rebuild the record from positional string arguments.

        Raises:
            MarshalError: On wrong argument count, malformed JSON or wrong types
        """
        declared = fields(cls)
        if len(args) != len(declared):
            raise MarshalError(f"{cls.FUNCTION} expects {len(declared)} arguments, got {len(args)}")
        values = {}
        for f, raw in zip(declared, args):
            try:
                value = json.loads(raw)
            except (TypeError, json.JSONDecodeError) as exc:
                raise MarshalError(f"{cls.FUNCTION}: argument '{f.name}' is not valid JSON") from exc
            if not _matches(value, f.type):
                raise MarshalError(f"{cls.FUNCTION}: argument '{f.name}' has wrong type {type(value).__name__}")
            values[f.name] = value
        return cls(**cls._decode(values))

    @classmethod
    def _decode(cls, values: dict) -> dict:
        return values


class NewOrderLine(NamedTuple):
    i_id: int
    supply_w_id: int
    quantity: int


@dataclass
class NewOrderArgs(ProfileArgs):
    FUNCTION: ClassVar[str] = ProfileType.NEW_ORDER.value

    w_id: int
    d_id: int
    c_id: int
    entry_date: int
    lines: List[NewOrderLine] = field(default_factory=list)

    @property
    def all_local(self) -> bool:
        return all(line.supply_w_id == self.w_id for line in self.lines)

    @classmethod
    def _decode(cls, values: dict) -> dict:
        try:
            values["lines"] = [NewOrderLine(*map(int, line)) for line in values["lines"]]
        except (TypeError, ValueError) as exc:
            raise MarshalError(f"{cls.FUNCTION}: malformed order line") from exc
        return values


@dataclass
class PaymentArgs(ProfileArgs):
    FUNCTION: ClassVar[str] = ProfileType.PAYMENT.value

    w_id: int
    d_id: int
    c_w_id: int
    c_d_id: int
    c_id: Optional[int]
    c_last: Optional[str]
    amount: int
    timestamp: int
    client_id: str


@dataclass
class OrderStatusArgs(ProfileArgs):
    FUNCTION: ClassVar[str] = ProfileType.ORDER_STATUS.value

    w_id: int
    d_id: int
    c_id: Optional[int]
    c_last: Optional[str]


@dataclass
class DeliveryArgs(ProfileArgs):
    FUNCTION: ClassVar[str] = ProfileType.DELIVERY.value

    w_id: int
    carrier_id: int
    delivery_date: int


@dataclass
class StockLevelArgs(ProfileArgs):
    FUNCTION: ClassVar[str] = ProfileType.STOCK_LEVEL.value

    w_id: int
    d_id: int
    threshold: int


@dataclass
class LoadArgs(ProfileArgs):
    """A batch of initial entities created in one transaction."""

    FUNCTION: ClassVar[str] = LOAD_FUNCTION

    entities: List[Tuple[EntityType, Entity]] = field(default_factory=list)

    def to_args(self) -> List[str]:
        return [
            json.dumps([entity_type.value, entity.to_record()], separators=(",", ":"), ensure_ascii=False)
            for entity_type, entity in self.entities
        ]

    @classmethod
    def from_args(cls, args: Sequence[str]) -> "LoadArgs":
        entities = []
        for position, raw in enumerate(args):
            try:
                type_name, record = json.loads(raw)
                entity_type = EntityType(type_name)
                entities.append((entity_type, ENTITY_CLASSES[entity_type](**record)))
            except (TypeError, ValueError) as exc:
                raise MarshalError(f"{LOAD_FUNCTION}: entity argument {position} is malformed") from exc
        return cls(entities)


ARGUMENT_CLASSES = {
    ProfileType.NEW_ORDER: NewOrderArgs,
    ProfileType.PAYMENT: PaymentArgs,
    ProfileType.ORDER_STATUS: OrderStatusArgs,
    ProfileType.DELIVERY: DeliveryArgs,
    ProfileType.STOCK_LEVEL: StockLevelArgs,
}

INVALID_ITEM_PERCENT = 1
REMOTE_SUPPLY_PERCENT = 1
LOCAL_PAYMENT_PERCENT = 85
BY_LAST_NAME_PERCENT = 60


def _other_warehouse(rng: RandomSource, warehouse_count: int, home_w: int) -> int:
    if warehouse_count <= 1:
        return home_w
    other = rng.number(1, warehouse_count - 1)
    return other if other < home_w else other + 1


def _customer_selector(rng: RandomSource, scale: ScaleParameters,
                       constants: NURandConstants) -> Tuple[Optional[int], Optional[str]]:
    if rng.number(1, 100) <= BY_LAST_NAME_PERCENT:
        return None, random_last_name(rng, scale.customers_per_district, constants.c_last)
    return nurand(NURAND_A_C_ID, 1, scale.customers_per_district, constants.c_id, rng), None


def generate_profile_input(profile: ProfileType, warehouse_count: int, home_w: int,
                           rng: RandomSource, scale: Optional[ScaleParameters] = None,
                           constants: Optional[NURandConstants] = None, now: int = 0,
                           home_d: Optional[int] = None, client_id: str = "") -> ProfileArgs:
    """
    Draw the input of one profile invocation following the TPC-C input rules.

    Args:
        profile: Profile to generate arguments for
        warehouse_count: Number of warehouses in the database
        home_w: Terminal's home warehouse
        rng: Terminal's random source
        scale: Database cardinalities (full TPC-C when omitted)
        constants: Run-time NURand constants
        now: Client timestamp in ticks
        home_d: Terminal's district (Stock Level); random when omitted
        client_id: Submitting client, part of the history key

    Returns:
        ProfileArgs: Argument record for the profile
    """
    if not 1 <= home_w <= warehouse_count:
        raise ValueError(f"home_w must be in 1..{warehouse_count}, got {home_w}")
    scale = scale or ScaleParameters.make(warehouse_count)
    constants = constants or NURandConstants(0, 0, 0)
    profile = ProfileType(profile)

    if profile is ProfileType.NEW_ORDER:
        d_id = rng.number(1, DISTRICTS_PER_WAREHOUSE)
        c_id = nurand(NURAND_A_C_ID, 1, scale.customers_per_district, constants.c_id, rng)
        line_count = rng.number(5, 15)
        rollback = rng.number(1, 100) <= INVALID_ITEM_PERCENT
        lines = []
        for number in range(1, line_count + 1):
            i_id = nurand(NURAND_A_ITEM, 1, scale.items, constants.ol_i_id, rng)
            if rollback and number == line_count:
                # Unused item id triggers the business rollback.
                i_id = scale.items + 1
            supply_w_id = home_w
            if rng.number(1, 100) <= REMOTE_SUPPLY_PERCENT:
                supply_w_id = _other_warehouse(rng, warehouse_count, home_w)
            lines.append(NewOrderLine(i_id, supply_w_id, rng.number(1, 10)))
        return NewOrderArgs(w_id=home_w, d_id=d_id, c_id=c_id, entry_date=now, lines=lines)

    if profile is ProfileType.PAYMENT:
        d_id = rng.number(1, DISTRICTS_PER_WAREHOUSE)
        if rng.number(1, 100) <= LOCAL_PAYMENT_PERCENT or warehouse_count == 1:
            c_w_id, c_d_id = home_w, d_id
        else:
            c_w_id = _other_warehouse(rng, warehouse_count, home_w)
            c_d_id = rng.number(1, DISTRICTS_PER_WAREHOUSE)
        c_id, c_last = _customer_selector(rng, scale, constants)
        return PaymentArgs(
            w_id=home_w, d_id=d_id, c_w_id=c_w_id, c_d_id=c_d_id, c_id=c_id, c_last=c_last,
            amount=rng.number(100, 500_000), timestamp=now, client_id=client_id,
        )

    if profile is ProfileType.ORDER_STATUS:
        d_id = rng.number(1, DISTRICTS_PER_WAREHOUSE)
        c_id, c_last = _customer_selector(rng, scale, constants)
        return OrderStatusArgs(w_id=home_w, d_id=d_id, c_id=c_id, c_last=c_last)

    if profile is ProfileType.DELIVERY:
        return DeliveryArgs(w_id=home_w, carrier_id=rng.number(1, 10), delivery_date=now)

    d_id = home_d if home_d is not None else rng.number(1, DISTRICTS_PER_WAREHOUSE)
    return StockLevelArgs(w_id=home_w, d_id=d_id, threshold=rng.number(10, 20))
