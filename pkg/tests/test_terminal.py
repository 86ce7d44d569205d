from collections import Counter
from dataclasses import replace

import pytest

from src.clock import to_ticks
from src.exceptions import HarnessFault
from src.inputs import ProfileType
from src.population import ScaleParameters
from src.random_gen import RandomSource
from src.terminal import (
    MIX_WEIGHTS,
    Dispatched,
    Phase,
    Response,
    Terminal,
    TimingConstraints,
    assign_home,
    next_profile,
)

SMALL = ScaleParameters.make(1, 300.0)


def _seed_starting_with(wanted: bool):
    """First seed whose first drawn profile is (or is not) a Delivery."""
    for seed in range(1_000):
        if (next_profile(RandomSource(seed)) is ProfileType.DELIVERY) == wanted:
            return seed
    raise AssertionError("no seed found")


def _terminal(seed: int, retry_cap: int = 5, timing=None) -> Terminal:
    return Terminal(1, 1, 1, 1, RandomSource(seed), timing or TimingConstraints.tpcc_standard(),
                    scale=SMALL, retry_cap=retry_cap)


def test_mix_weights_sum_to_one():
    assert sum(weight for _, weight in MIX_WEIGHTS) == pytest.approx(1.0)


def test_mix_frequencies():
    rng = RandomSource(1)
    counts = Counter(next_profile(rng) for _ in range(100_000))
    assert counts[ProfileType.NEW_ORDER] / 100_000 == pytest.approx(0.45, abs=0.01)
    assert counts[ProfileType.PAYMENT] / 100_000 == pytest.approx(0.43, abs=0.01)
    assert counts[ProfileType.DELIVERY] / 100_000 == pytest.approx(0.04, abs=0.005)


def test_mix_is_deterministic():
    first, second = RandomSource(2), RandomSource(2)
    assert [next_profile(first) for _ in range(500)] == [next_profile(second) for _ in range(500)]


def test_timing_presets():
    standard = TimingConstraints.tpcc_standard()
    assert standard.lead_time(ProfileType.STOCK_LEVEL) == to_ticks(2.1)
    assert to_ticks(100) + standard.lead_time(ProfileType.STOCK_LEVEL) == to_ticks(102.1)
    assert TimingConstraints.measured().mean_cycle() == pytest.approx(9.8, abs=0.3)
    assert standard.mean_cycle() > 20
    assert TimingConstraints.for_preset("tpcc-standard", 0.5).mean_cycle() < standard.mean_cycle()
    with pytest.raises(ValueError):
        TimingConstraints.for_preset("fast")


def test_first_request_is_scheduled_after_menu_and_keying():
    terminal = _terminal(3)
    request = terminal.start(to_ticks(100))
    assert request.scheduled == to_ticks(100) + terminal.timing.lead_time(request.profile)
    assert request.seq == 1 and request.retry == 0
    assert terminal.phase is Phase.KEYING


def test_response_starts_next_cycle_after_think_time():
    terminal = _terminal(_seed_starting_with(False))
    request = terminal.start(0)
    assert terminal.advance(Dispatched(request), request.scheduled) is None
    assert terminal.phase is Phase.AWAITING_RESPONSE
    following = terminal.advance(Response(request), request.scheduled + 10)
    assert following.seq == 2
    assert following.scheduled >= request.scheduled + 10 + terminal.timing.lead_time(following.profile)
    assert terminal.stats.responses == 1


def test_delivery_is_deferred():
    terminal = _terminal(_seed_starting_with(True))
    delivery = terminal.start(0)
    assert delivery.profile is ProfileType.DELIVERY and delivery.deferred
    following = terminal.advance(Dispatched(delivery), delivery.scheduled)
    assert following is not None and following.seq == 2
    assert terminal.stats.deferred == 1
    assert delivery.business_id in terminal.deferred
    assert terminal.advance(Response(delivery), delivery.scheduled + 5) is None
    assert not terminal.deferred


def test_conflict_retries_with_identical_arguments():
    terminal = _terminal(_seed_starting_with(False))
    request = terminal.start(0)
    terminal.advance(Dispatched(request), request.scheduled)
    retry = terminal.advance(Response(request, conflict=True), 50)
    assert retry.retry == 1
    assert retry.args == request.args
    assert retry.tx_id != request.tx_id and retry.business_id == request.business_id
    assert retry.scheduled == 50
    assert terminal.stats.retries == 1


def test_zero_retry_cap_moves_on():
    terminal = _terminal(_seed_starting_with(False), retry_cap=0)
    request = terminal.start(0)
    terminal.advance(Dispatched(request), request.scheduled)
    following = terminal.advance(Response(request, conflict=True), 50)
    assert following.seq == 2
    assert terminal.stats.abandoned == 0


def test_exhausted_retries_are_abandoned():
    terminal = _terminal(_seed_starting_with(False), retry_cap=1)
    request = terminal.start(0)
    terminal.advance(Dispatched(request), request.scheduled)
    retry = terminal.advance(Response(request, conflict=True), 50)
    terminal.advance(Dispatched(retry), 50)
    following = terminal.advance(Response(retry, conflict=True), 60)
    assert following.seq == 2 and following.retry == 0
    assert terminal.stats.abandoned == 1


def test_mismatched_events_are_faults():
    terminal = _terminal(_seed_starting_with(False))
    request = terminal.start(0)
    with pytest.raises(HarnessFault):
        terminal.advance(Dispatched(replace(request, seq=99)), 0)
    terminal.advance(Dispatched(request), request.scheduled)
    terminal.advance(Response(request), request.scheduled)
    with pytest.raises(HarnessFault):
        terminal.advance(Response(request), request.scheduled)


def test_assign_home():
    assert assign_home(1, 2, 10) == (1, 1)
    assert assign_home(10, 2, 10) == (1, 10)
    assert assign_home(11, 2, 10) == (2, 1)
    assert assign_home(21, 2, 10) == (1, 1)
    assert assign_home(3, 1, 0) == (1, 1)
