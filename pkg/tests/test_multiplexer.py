import pytest
import simpy

from src.clock import VirtualClock
from src.exceptions import ReportError
from src.inputs import DeliveryArgs, ProfileType
from src.multiplexer import Multiplexer, PrecisionSummary, median_decreases, precision_report
from src.terminal import TerminalRequest


def _request(terminal_id: int, scheduled: int, seq: int = 1) -> TerminalRequest:
    return TerminalRequest(terminal_id=terminal_id, seq=seq, retry=0, profile=ProfileType.DELIVERY,
                           args=DeliveryArgs(1, 1, scheduled), scheduled=scheduled, created=0)


def _multiplexer(env=None):
    env = env or simpy.Environment()
    submitted = []
    multiplexer = Multiplexer(env, VirtualClock(), lambda request: submitted.append((env.now, request)))
    return env, multiplexer, submitted


def test_pops_in_scheduled_order():
    _, multiplexer, _ = _multiplexer()
    for terminal_id, scheduled in ((1, 9), (2, 3), (3, 5)):
        multiplexer.push(_request(terminal_id, scheduled))
    request, sample, wait = multiplexer.pop_and_wait(0)
    assert request.scheduled == 3
    assert sample.d == 3 and wait == 3 and not sample.violation
    assert [multiplexer.pop_and_wait(0)[0].scheduled for _ in range(2)] == [5, 9]
    assert multiplexer.pop_and_wait(0) is None
    assert multiplexer.queue.pushed == multiplexer.queue.popped == 3


def test_late_pop_is_a_violation():
    _, multiplexer, _ = _multiplexer()
    multiplexer.push(_request(1, 100))
    _, sample, wait = multiplexer.pop_and_wait(150)
    assert sample.d == -50 and sample.violation
    assert wait == 0


def test_ties_break_on_terminal_id():
    _, multiplexer, _ = _multiplexer()
    multiplexer.push(_request(7, 10))
    multiplexer.push(_request(2, 10))
    assert multiplexer.pop_and_wait(0)[0].terminal_id == 2


def test_virtual_dispatch_is_exact():
    env, multiplexer, submitted = _multiplexer()
    for terminal_id, scheduled in ((1, 3_000), (2, 1_000), (3, 2_000)):
        multiplexer.push(_request(terminal_id, scheduled))
    env.run(until=10_000)
    assert [(now, request.scheduled) for now, request in submitted] == [
        (1_000, 1_000), (2_000, 2_000), (3_000, 3_000)]
    assert all(sample.d == 0 for sample in multiplexer.samples)


def test_push_wakes_idle_dispatcher():
    env, multiplexer, submitted = _multiplexer()

    def later():
        yield env.timeout(500)
        multiplexer.push(_request(1, 800))

    env.process(later())
    env.run(until=2_000)
    assert [now for now, _ in submitted] == [800]


def test_stop_drops_queued_requests():
    env, multiplexer, submitted = _multiplexer()
    multiplexer.push(_request(1, 500))
    multiplexer.push(_request(2, 5_000))
    env.run(until=1_000)
    dropped = multiplexer.stop()
    env.run(until=10_000)
    assert [request.terminal_id for request in dropped] == [2]
    assert len(submitted) == 1


def test_precision_report():
    summary = precision_report([1.0] * 10)
    assert summary.median == 1.0 and summary.violations == 0 and summary.count == 10
    mixed = precision_report([-0.1, 0.2, 0.3])
    assert mixed.violations == 1
    assert mixed.minimum == pytest.approx(-0.1)
    assert set(mixed.as_dict()) == {"count", "min", "q1", "median", "q3", "max", "violations"}
    with pytest.raises(ReportError):
        precision_report([])


def test_precision_report_accepts_samples():
    _, multiplexer, _ = _multiplexer()
    multiplexer.push(_request(1, 2_000_000))
    multiplexer.pop_and_wait(1_500_000)
    assert precision_report(multiplexer.samples).median == pytest.approx(0.5)


def test_median_decreases():
    def summary(median):
        return PrecisionSummary(1, median, median, median, median, median, 0)

    assert median_decreases({10: summary(1.0), 20: summary(0.5), 40: summary(0.1)})
    assert not median_decreases({10: summary(1.0), 20: summary(0.5), 40: summary(0.5)})
    assert not median_decreases({10: summary(0.2), 20: summary(0.5)})
