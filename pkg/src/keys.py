"""
Composite keys for the ordered key-value world state.

A key is the table name followed by its primary-key components, each terminated
by a NUL separator (the separator sorts below every alphanumeric character, so a
partial key is a strict prefix of all keys it covers). Numeric components are
left-padded with zeros so that lexicographic order equals numeric order.
"""

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

from .entities import Entity, EntityType
from .exceptions import KeyEncodingError

SEPARATOR = "\x00"
# Upper bound appended to a partial key to close its range.
MAX_KEY_CHAR = "\U0010ffff"

WAREHOUSE_PAD = 6
DISTRICT_PAD = 2
CUSTOMER_PAD = 6
ORDER_PAD = 6
ITEM_PAD = 6
ORDER_LINE_NUMBER_PAD = 2
TIMESTAMP_PAD = 15

CUSTOMER_LAST_NAME_PREFIX = "CUSTOMER_LAST"

Component = Union[int, str]


@dataclass(frozen=True)
class CompositeKey:
    """Type prefix plus stringified, padded primary-key parts."""

    type_prefix: str
    parts: Tuple[str, ...] = ()

    def serialize(self) -> str:
        return SEPARATOR + SEPARATOR.join((self.type_prefix,) + self.parts) + SEPARATOR

    def range_bounds(self) -> Tuple[str, str]:
        """Half-open [start, end) range covering every key extending this one."""
        start = self.serialize()
        return start, start + MAX_KEY_CHAR

    @classmethod
    def parse(cls, raw: str) -> "CompositeKey":
        if not raw.startswith(SEPARATOR) or not raw.endswith(SEPARATOR) or len(raw) < 2:
            raise KeyEncodingError(f"Not a composite key: {raw!r}")
        pieces = raw[1:-1].split(SEPARATOR)
        return cls(pieces[0], tuple(pieces[1:]))

    def __str__(self) -> str:
        return "_".join((self.type_prefix,) + self.parts)


def type_of(raw: str) -> str:
    """Type prefix of a serialized key."""
    end = raw.find(SEPARATOR, 1)
    if end < 0:
        raise KeyEncodingError(f"Not a composite key: {raw!r}")
    return raw[1:end]


def printable(raw: str) -> str:
    """Human-readable rendering of a serialized key."""
    return raw.strip(SEPARATOR).replace(SEPARATOR, "_")


def encode_component(value: Component, pad_width: Optional[int]) -> str:
    if isinstance(value, bool):
        raise KeyEncodingError(f"Boolean key component {value!r}")
    if isinstance(value, int):
        if pad_width is None:
            raise KeyEncodingError(f"No pad width given for numeric component {value}")
        if value < 0 or value >= 10 ** pad_width:
            raise KeyEncodingError(f"Component {value} does not fit pad width {pad_width}")
        return str(value).zfill(pad_width)
    text = str(value)
    if SEPARATOR in text or MAX_KEY_CHAR in text:
        raise KeyEncodingError(f"Key component contains a reserved character: {text!r}")
    return text


def make_key(type_prefix: str, parts: Sequence[Component],
             pad_width: Union[int, Sequence[Optional[int]]]) -> CompositeKey:
    """
    Build a composite key.

    Args:
        type_prefix: Table name (e.g. "WAREHOUSE")
        parts: Primary-key components; ints are zero-padded, strings kept as-is
        pad_width: One width for all numeric parts, or one width per part

    Returns:
        CompositeKey: The encoded key
    """
    if isinstance(pad_width, int):
        widths = [pad_width] * len(parts)
    else:
        widths = list(pad_width)
        if len(widths) < len(parts):
            raise KeyEncodingError(
                f"{len(parts)} parts given for {type_prefix} but only {len(widths)} pad widths"
            )
    encoded = tuple(encode_component(part, width) for part, width in zip(parts, widths))
    return CompositeKey(encode_component(type_prefix, None), encoded)


def flip_order_id(o_id: int, pad_width: int = ORDER_PAD) -> int:
    """
    Map an order id onto a decreasing counter so the newest order sorts first.

    Returns:
        int: (10^pad_width - 1) - o_id
    """
    upper = 10 ** pad_width - 1
    if o_id < 0 or o_id > upper:
        raise KeyEncodingError(f"Order id {o_id} does not fit pad width {pad_width}")
    return upper - o_id


def warehouse_key(w_id: int) -> CompositeKey:
    return make_key(EntityType.WAREHOUSE.value, [w_id], WAREHOUSE_PAD)


def district_key(w_id: int, d_id: int) -> CompositeKey:
    return make_key(EntityType.DISTRICT.value, [w_id, d_id], [WAREHOUSE_PAD, DISTRICT_PAD])


def customer_last_name_key(w_id: int, d_id: int, c_last: str,
                           c_id: Optional[int] = None) -> CompositeKey:
    """Secondary key (w, d, c_last, c_id); without c_id it is the partial lookup key."""
    parts = [w_id, d_id, c_last] if c_id is None else [w_id, d_id, c_last, c_id]
    return make_key(CUSTOMER_LAST_NAME_PREFIX, parts,
                    [WAREHOUSE_PAD, DISTRICT_PAD, None, CUSTOMER_PAD])


def history_key(customer: Tuple[int, int, int], client_timestamp: int,
                client_id: str) -> CompositeKey:
    """Key of a history row: customer (w, d, c), client timestamp, client id."""
    w_id, d_id, c_id = customer
    return make_key(EntityType.HISTORY.value, [w_id, d_id, c_id, client_timestamp, client_id],
                    [WAREHOUSE_PAD, DISTRICT_PAD, CUSTOMER_PAD, TIMESTAMP_PAD, None])


def order_key(w_id: int, d_id: int, o_id: Optional[int] = None) -> CompositeKey:
    parts = [w_id, d_id] if o_id is None else [w_id, d_id, flip_order_id(o_id)]
    return make_key(EntityType.ORDER.value, parts, [WAREHOUSE_PAD, DISTRICT_PAD, ORDER_PAD])


def item_key(i_id: int) -> CompositeKey:
    return make_key(EntityType.ITEM.value, [i_id], ITEM_PAD)


@dataclass(frozen=True)
class RegistryDescriptor:
    """Structure of one entity type's key space."""

    entity_type: EntityType
    key_fields: Tuple[str, ...]
    pad_widths: Tuple[Optional[int], ...]
    # Index of a key field stored flipped (newest first), if any.
    flipped_field: Optional[int] = None
    secondary_index: Optional[str] = None

    def key_parts(self, values: Sequence[Component]) -> list:
        parts = list(values)
        if self.flipped_field is not None and len(parts) > self.flipped_field:
            parts[self.flipped_field] = flip_order_id(parts[self.flipped_field],
                                                      self.pad_widths[self.flipped_field])
        return parts

    def key(self, *values: Component) -> CompositeKey:
        """Full or partial key from primary-key values (flip applied where configured)."""
        if len(values) > len(self.key_fields):
            raise KeyEncodingError(
                f"{self.entity_type.value} has {len(self.key_fields)} key fields, got {len(values)}"
            )
        return make_key(self.entity_type.value, self.key_parts(values), self.pad_widths)

    def key_of(self, entity: Entity) -> CompositeKey:
        return self.key(*(getattr(entity, name) for name in self.key_fields))

    def check_capacity(self, max_values: Dict[str, int]) -> None:
        """Raise if a configured maximum would overflow its padded field."""
        for name, width in zip(self.key_fields, self.pad_widths):
            if name in max_values and width is not None and max_values[name] >= 10 ** width:
                raise KeyEncodingError(
                    f"{self.entity_type.value}.{name} maximum {max_values[name]} overflows pad width {width}"
                )


DESCRIPTORS: Dict[EntityType, RegistryDescriptor] = {
    EntityType.WAREHOUSE: RegistryDescriptor(
        EntityType.WAREHOUSE, ("w_id",), (WAREHOUSE_PAD,)),
    EntityType.DISTRICT: RegistryDescriptor(
        EntityType.DISTRICT, ("d_w_id", "d_id"), (WAREHOUSE_PAD, DISTRICT_PAD)),
    EntityType.CUSTOMER: RegistryDescriptor(
        EntityType.CUSTOMER, ("c_w_id", "c_d_id", "c_id"),
        (WAREHOUSE_PAD, DISTRICT_PAD, CUSTOMER_PAD),
        secondary_index=CUSTOMER_LAST_NAME_PREFIX),
    EntityType.HISTORY: RegistryDescriptor(
        EntityType.HISTORY, ("h_c_w_id", "h_c_d_id", "h_c_id", "h_date", "h_client_id"),
        (WAREHOUSE_PAD, DISTRICT_PAD, CUSTOMER_PAD, TIMESTAMP_PAD, None)),
    EntityType.NEW_ORDER: RegistryDescriptor(
        EntityType.NEW_ORDER, ("no_w_id", "no_d_id", "no_o_id"),
        (WAREHOUSE_PAD, DISTRICT_PAD, ORDER_PAD)),
    EntityType.ORDER: RegistryDescriptor(
        EntityType.ORDER, ("o_w_id", "o_d_id", "o_id"),
        (WAREHOUSE_PAD, DISTRICT_PAD, ORDER_PAD), flipped_field=2),
    EntityType.ORDER_LINE: RegistryDescriptor(
        EntityType.ORDER_LINE, ("ol_w_id", "ol_d_id", "ol_o_id", "ol_number"),
        (WAREHOUSE_PAD, DISTRICT_PAD, ORDER_PAD, ORDER_LINE_NUMBER_PAD)),
    EntityType.ITEM: RegistryDescriptor(
        EntityType.ITEM, ("i_id",), (ITEM_PAD,)),
    EntityType.STOCK: RegistryDescriptor(
        EntityType.STOCK, ("s_w_id", "s_i_id"), (WAREHOUSE_PAD, ITEM_PAD)),
}


def check_scale_capacity(warehouses: int, items: int, customers_per_district: int) -> None:
    """Verify that the configured scale fits every pad width."""
    limits = {
        "w_id": warehouses, "d_w_id": warehouses, "c_w_id": warehouses, "s_w_id": warehouses,
        "i_id": items, "s_i_id": items, "c_id": customers_per_district,
    }
    for descriptor in DESCRIPTORS.values():
        descriptor.check_capacity(limits)

