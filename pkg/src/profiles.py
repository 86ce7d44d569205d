"""
Business logic of the TPC-C transaction profiles.

Each profile is a deterministic function of the registries' snapshot and its
typed arguments. Profiles return plain dict payloads; a BusinessRollback
raised here is turned into a rollback response by the contract layer.
"""

import logging
from typing import Dict, List

from .entities import (
    BASIS_POINTS,
    DISTRICTS_PER_WAREHOUSE,
    Customer,
    History,
    NewOrder,
    Order,
    OrderLine,
)
from .exceptions import BusinessRollback
from .inputs import (
    DeliveryArgs,
    LoadArgs,
    NewOrderArgs,
    OrderStatusArgs,
    PaymentArgs,
    StockLevelArgs,
)
from .registry import TpccRegistries

logger = logging.getLogger(__name__)

BAD_CREDIT = "BC"
C_DATA_MAX = 500
STOCK_LEVEL_ORDERS = 20
# Fixed-point scale of the New Order total: one factor per basis-point term.
_TOTAL_SCALE = BASIS_POINTS * BASIS_POINTS


def _resolve_customer(registries: TpccRegistries, w_id: int, d_id: int, c_id, c_last) -> Customer:
    if c_id is not None:
        return registries.customers.read(w_id, d_id, c_id)
    return registries.customers.select_by_last_name(w_id, d_id, c_last)


def do_new_order(registries: TpccRegistries, args: NewOrderArgs) -> Dict:
    """
    Enter a complete order.

    Reads the warehouse, district and customer, takes the next order id from the
    district, creates the order, its NewOrder row and one line per item, and
    updates the stock of every item.

    Raises:
        BusinessRollback: If an item id does not exist
        NotFoundError: If the warehouse, district or customer is missing
    """
    warehouse = registries.warehouses.read(args.w_id)
    district = registries.districts.read(args.w_id, args.d_id)
    customer = registries.customers.read(args.w_id, args.d_id, args.c_id)

    items = []
    for line in args.lines:
        item = registries.items.find(line.i_id)
        if item is None:
            raise BusinessRollback(f"Item number {line.i_id} is not valid")
        items.append(item)

    o_id = district.d_next_o_id
    district.d_next_o_id += 1
    registries.districts.update(district)

    registries.orders.create(Order(
        o_id=o_id,
        o_d_id=args.d_id,
        o_w_id=args.w_id,
        o_c_id=args.c_id,
        o_entry_d=args.entry_date,
        o_carrier_id=None,
        o_ol_cnt=len(args.lines),
        o_all_local=1 if args.all_local else 0,
    ))
    registries.new_orders.create(NewOrder(no_o_id=o_id, no_d_id=args.d_id, no_w_id=args.w_id))

    dist_index = args.d_id - 1
    amount_sum = 0
    lines = []
    for number, (line, item) in enumerate(zip(args.lines, items), start=1):
        stock = registries.stocks.read(line.supply_w_id, line.i_id)
        if stock.s_quantity >= line.quantity + 10:
            stock.s_quantity -= line.quantity
        else:
            stock.s_quantity = stock.s_quantity - line.quantity + 91
        stock.s_ytd += line.quantity
        stock.s_order_cnt += 1
        if line.supply_w_id != args.w_id:
            stock.s_remote_cnt += 1
        registries.stocks.update(stock)

        amount = line.quantity * item.i_price
        amount_sum += amount
        registries.order_lines.create(OrderLine(
            ol_o_id=o_id,
            ol_d_id=args.d_id,
            ol_w_id=args.w_id,
            ol_number=number,
            ol_i_id=line.i_id,
            ol_supply_w_id=line.supply_w_id,
            ol_delivery_d=None,
            ol_quantity=line.quantity,
            ol_amount=amount,
            ol_dist_info=stock.s_dist[dist_index],
        ))
        brand = "B" if "ORIGINAL" in item.i_data and "ORIGINAL" in stock.s_data else "G"
        lines.append({
            "i_id": line.i_id,
            "supply_w_id": line.supply_w_id,
            "quantity": line.quantity,
            "i_name": item.i_name,
            "s_quantity": stock.s_quantity,
            "brand_generic": brand,
            "i_price": item.i_price,
            "ol_amount": amount,
        })

    total = new_order_total(amount_sum, customer.c_discount, warehouse.w_tax, district.d_tax)
    return {
        "w_id": args.w_id,
        "d_id": args.d_id,
        "c_id": args.c_id,
        "o_id": o_id,
        "c_last": customer.c_last,
        "c_credit": customer.c_credit,
        "c_discount": customer.c_discount,
        "w_tax": warehouse.w_tax,
        "d_tax": district.d_tax,
        "o_ol_cnt": len(args.lines),
        "o_entry_d": args.entry_date,
        "total_amount": total,
        "lines": lines,
    }


def new_order_total(amount_sum: int, discount: int, w_tax: int, d_tax: int) -> int:
    """sum * (1 - discount) * (1 + w_tax + d_tax) in cents, rounded half up."""
    scaled = amount_sum * (BASIS_POINTS - discount) * (BASIS_POINTS + w_tax + d_tax)
    return (scaled + _TOTAL_SCALE // 2) // _TOTAL_SCALE


def do_payment(registries: TpccRegistries, args: PaymentArgs) -> Dict:
    """
    Record a customer payment.

    Updates warehouse and district year-to-date amounts and the customer's
    balance and counters, and appends a history row keyed by the client's
    timestamp and id.
    """
    warehouse = registries.warehouses.read(args.w_id)
    warehouse.w_ytd += args.amount
    registries.warehouses.update(warehouse)

    district = registries.districts.read(args.w_id, args.d_id)
    district.d_ytd += args.amount
    registries.districts.update(district)

    customer = _resolve_customer(registries, args.c_w_id, args.c_d_id, args.c_id, args.c_last)
    customer.c_balance -= args.amount
    customer.c_ytd_payment += args.amount
    customer.c_payment_cnt += 1
    if customer.c_credit == BAD_CREDIT:
        entry = f"{customer.c_id} {customer.c_d_id} {customer.c_w_id} {args.d_id} {args.w_id} {args.amount}"
        customer.c_data = (entry + " " + customer.c_data)[:C_DATA_MAX]
    registries.customers.update(customer)

    registries.history.create(History(
        h_c_id=customer.c_id,
        h_c_d_id=customer.c_d_id,
        h_c_w_id=customer.c_w_id,
        h_d_id=args.d_id,
        h_w_id=args.w_id,
        h_date=args.timestamp,
        h_amount=args.amount,
        h_data=f"{warehouse.w_name}    {district.d_name}",
        h_client_id=args.client_id,
    ))
    return {
        "w_id": args.w_id,
        "d_id": args.d_id,
        "c_id": customer.c_id,
        "c_last": customer.c_last,
        "c_credit": customer.c_credit,
        "c_balance": customer.c_balance,
        "amount": args.amount,
        "h_date": args.timestamp,
    }


def do_order_status(registries: TpccRegistries, args: OrderStatusArgs) -> Dict:
    """
    Report a customer's newest order.

    Walks the district's orders newest-first (flipped order key) and stops at
    the first order placed by the customer, then reads that order's lines.
    """
    customer = _resolve_customer(registries, args.w_id, args.d_id, args.c_id, args.c_last)
    result = {
        "w_id": args.w_id,
        "d_id": args.d_id,
        "c_id": customer.c_id,
        "c_last": customer.c_last,
        "c_balance": customer.c_balance,
        "o_id": None,
        "lines": [],
    }
    order = None
    for candidate in registries.orders.iter_range(args.w_id, args.d_id):
        if candidate.o_c_id == customer.c_id:
            order = candidate
            break
    if order is None:
        return result

    lines = registries.order_lines.read_range(args.w_id, args.d_id, order.o_id)
    result.update({
        "o_id": order.o_id,
        "o_entry_d": order.o_entry_d,
        "o_carrier_id": order.o_carrier_id,
        "lines": [
            {
                "i_id": line.ol_i_id,
                "supply_w_id": line.ol_supply_w_id,
                "quantity": line.ol_quantity,
                "amount": line.ol_amount,
                "delivery_d": line.ol_delivery_d,
            }
            for line in lines
        ],
    })
    return result


def do_delivery(registries: TpccRegistries, args: DeliveryArgs) -> Dict:
    """
    Deliver the oldest undelivered order of every district of a warehouse.

    Districts without undelivered orders are skipped and reported.
    """
    registries.warehouses.read(args.w_id)
    delivered: List[Dict] = []
    skipped: List[int] = []
    for d_id in range(1, DISTRICTS_PER_WAREHOUSE + 1):
        oldest = registries.new_orders.read_range(args.w_id, d_id, limit=1)
        if not oldest:
            skipped.append(d_id)
            continue
        o_id = oldest[0].no_o_id
        registries.new_orders.delete(args.w_id, d_id, o_id)

        order = registries.orders.read(args.w_id, d_id, o_id)
        order.o_carrier_id = args.carrier_id
        registries.orders.update(order)

        amount = 0
        for line in registries.order_lines.read_range(args.w_id, d_id, o_id):
            line.ol_delivery_d = args.delivery_date
            amount += line.ol_amount
            registries.order_lines.update(line)

        customer = registries.customers.read(args.w_id, d_id, order.o_c_id)
        customer.c_balance += amount
        customer.c_delivery_cnt += 1
        registries.customers.update(customer)
        delivered.append({"d_id": d_id, "o_id": o_id, "c_id": order.o_c_id, "amount": amount})

    if skipped:
        logger.debug("Delivery for warehouse %d skipped districts %s", args.w_id, skipped)
    return {
        "w_id": args.w_id,
        "carrier_id": args.carrier_id,
        "delivered": delivered,
        "skipped_districts": skipped,
    }


def do_stock_level(registries: TpccRegistries, args: StockLevelArgs) -> Dict:
    """
    Count recently sold items whose stock is below a threshold.

    Examines the lines of the district's last twenty orders and reads the
    stock of every distinct item once.
    """
    district = registries.districts.read(args.w_id, args.d_id)
    next_o_id = district.d_next_o_id
    low = max(1, next_o_id - STOCK_LEVEL_ORDERS)
    high = next_o_id - 1
    item_ids = set()
    if high >= low:
        lines = registries.order_lines.read_between((args.w_id, args.d_id, low),
                                                    (args.w_id, args.d_id, high))
        item_ids = {line.ol_i_id for line in lines}
    low_stock = 0
    for i_id in sorted(item_ids):
        stock = registries.stocks.read(args.w_id, i_id)
        if stock.s_quantity < args.threshold:
            low_stock += 1
    return {
        "w_id": args.w_id,
        "d_id": args.d_id,
        "threshold": args.threshold,
        "distinct_items": len(item_ids),
        "low_stock": low_stock,
    }


def do_load(registries: TpccRegistries, args: LoadArgs) -> Dict:
    """Create a batch of initial entities."""
    for _, entity in args.entities:
        registries.create(entity)
    return {"created": len(args.entities)}
