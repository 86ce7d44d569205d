import pytest

from src.exceptions import MarshalError
from src.inputs import (
    DeliveryArgs,
    LoadArgs,
    NewOrderArgs,
    NewOrderLine,
    PaymentArgs,
    ProfileType,
    StockLevelArgs,
    generate_profile_input,
)
from src.population import ScaleParameters
from src.random_gen import NURandConstants, RandomSource
from tests.helpers import make_customer

SMALL = ScaleParameters.make(1, 300.0)


def test_new_order_inputs():
    rng = RandomSource(1)
    for _ in range(500):
        args = generate_profile_input(ProfileType.NEW_ORDER, 1, 1, rng, SMALL)
        assert 5 <= len(args.lines) <= 15
        assert args.all_local
        assert all(1 <= line.quantity <= 10 for line in args.lines)
        assert all(1 <= line.i_id <= SMALL.items + 1 for line in args.lines)


def test_invalid_item_rate_is_about_one_percent():
    rng = RandomSource(2)
    runs = 20_000
    invalid = sum(
        generate_profile_input(ProfileType.NEW_ORDER, 1, 1, rng, SMALL).lines[-1].i_id == SMALL.items + 1
        for _ in range(runs)
    )
    assert invalid / runs == pytest.approx(0.01, abs=0.003)


def test_remote_supply_with_several_warehouses():
    rng = RandomSource(3)
    scale = ScaleParameters.make(5, 300.0)
    remote = []
    for _ in range(3_000):
        args = generate_profile_input(ProfileType.NEW_ORDER, 5, 2, rng, scale)
        remote.extend(line.supply_w_id for line in args.lines if line.supply_w_id != 2)
    assert remote
    assert all(1 <= w_id <= 5 and w_id != 2 for w_id in remote)


def test_payment_customer_selection_mix():
    rng = RandomSource(4)
    runs = 20_000
    by_name = 0
    for _ in range(runs):
        args = generate_profile_input(ProfileType.PAYMENT, 1, 1, rng, SMALL, client_id="t1")
        assert (args.c_id is None) != (args.c_last is None)
        assert (args.c_w_id, args.c_d_id) == (args.w_id, args.d_id)
        assert 100 <= args.amount <= 500_000
        by_name += args.c_last is not None
    assert by_name / runs == pytest.approx(0.60, abs=0.02)


def test_other_profiles():
    rng = RandomSource(5)
    delivery = generate_profile_input(ProfileType.DELIVERY, 3, 3, rng, now=77)
    assert isinstance(delivery, DeliveryArgs)
    assert 1 <= delivery.carrier_id <= 10 and delivery.delivery_date == 77
    stock = generate_profile_input(ProfileType.STOCK_LEVEL, 3, 1, rng, home_d=4)
    assert isinstance(stock, StockLevelArgs)
    assert stock.d_id == 4 and 10 <= stock.threshold <= 20
    status = generate_profile_input(ProfileType.ORDER_STATUS, 1, 1, rng, SMALL, NURandConstants(1, 2, 3))
    assert 1 <= status.d_id <= 10


def test_home_warehouse_is_checked():
    with pytest.raises(ValueError):
        generate_profile_input(ProfileType.DELIVERY, 2, 3, RandomSource(1))


def test_read_only_profiles():
    assert {p for p in ProfileType if p.read_only} == {ProfileType.ORDER_STATUS, ProfileType.STOCK_LEVEL}


def test_string_arguments_rebuild_the_record():
    args = NewOrderArgs(w_id=1, d_id=2, c_id=3, entry_date=4,
                        lines=[NewOrderLine(1, 1, 5), NewOrderLine(7, 2, 1)])
    assert NewOrderArgs.from_args(args.to_args()) == args
    payment = PaymentArgs(1, 1, 1, 1, None, "BARBARBAR", 1000, 5, "client")
    assert PaymentArgs.from_args(payment.to_args()) == payment
    load = LoadArgs([(make_customer(1, "ABLE").TYPE, make_customer(1, "ABLE"))])
    assert LoadArgs.from_args(load.to_args()) == load


def test_malformed_arguments():
    good = StockLevelArgs(1, 1, 10).to_args()
    with pytest.raises(MarshalError):
        StockLevelArgs.from_args(good[:2])
    with pytest.raises(MarshalError):
        StockLevelArgs.from_args(["1", "1", "not json"])
    with pytest.raises(MarshalError):
        StockLevelArgs.from_args(["1", "1", '"ten"'])
    with pytest.raises(MarshalError):
        StockLevelArgs.from_args(["1", "true", "10"])
    with pytest.raises(MarshalError):
        NewOrderArgs.from_args(["1", "1", "1", "0", '[["x", 1]]'])
    with pytest.raises(MarshalError):
        LoadArgs.from_args(['["NOT_A_TYPE", {}]'])
