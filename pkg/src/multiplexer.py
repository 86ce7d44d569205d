"""
Per-worker request multiplexer.

Keeps the requests of all terminals of a worker in one queue sorted by their
scheduled submission time and releases them one at a time from a single
dispatcher. Each release records the scheduling precision d = t2 - t1, the
scheduled time minus the time the dispatcher popped the request; a negative d
is a timing-constraint violation.
"""

import heapq
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import simpy

from .clock import SimulationClock, to_seconds
from .exceptions import ReportError
from .inputs import ProfileType
from .terminal import TerminalRequest

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PrecisionSample:
    """One dispatch: pop time t1 and scheduled time t2, in ticks."""

    t1: int
    t2: int
    terminal_id: int
    profile: ProfileType

    @property
    def d(self) -> int:
        return self.t2 - self.t1

    @property
    def violation(self) -> bool:
        return self.d < 0


class ScheduledQueue:
    """Priority queue ordered by (scheduled time, terminal id, sequence, retry)."""

    def __init__(self):
        self._heap: List[Tuple[int, int, int, int, TerminalRequest]] = []
        self.pushed = 0
        self.popped = 0

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, request: TerminalRequest) -> None:
        entry = (request.scheduled, request.terminal_id, request.seq, request.retry, request)
        heapq.heappush(self._heap, entry)
        self.pushed += 1

    def peek_time(self) -> Optional[int]:
        return self._heap[0][0] if self._heap else None

    def pop(self) -> TerminalRequest:
        self.popped += 1
        return heapq.heappop(self._heap)[-1]

    def drain(self) -> List[TerminalRequest]:
        """Remove and return everything still queued, in pop order."""
        remaining = [heapq.heappop(self._heap)[-1] for _ in range(len(self._heap))]
        return remaining


class Multiplexer:
    """
    Single-threaded rate controller of one worker.

    Under a lazy (virtual) clock the dispatcher sleeps until the head of the
    queue is due, so every sample has d = 0. Under an eager (wall) clock it
    pops the head as soon as it is free and then waits for the scheduled time,
    which exposes dispatcher lag as negative precision.
    """

    def __init__(self, env: simpy.Environment, clock: SimulationClock,
                 submit: Callable[[TerminalRequest], None], worker_id: int = 0):
        self.env = env
        self.clock = clock
        self.submit = submit
        self.worker_id = worker_id
        self.queue = ScheduledQueue()
        self.samples: List[PrecisionSample] = []
        self.stopped = False
        self._wakeup = env.event()
        self.process = env.process(self._dispatch())

    def push(self, request: TerminalRequest) -> None:
        self.queue.push(request)
        self._wake()

    def stop(self) -> List[TerminalRequest]:
        """Stop dispatching; returns the requests that were never released."""
        self.stopped = True
        self._wake()
        dropped = self.queue.drain()
        if dropped:
            logger.debug("Worker %d dropped %d queued request(s)", self.worker_id, len(dropped))
        return dropped

    def _wake(self) -> None:
        if not self._wakeup.triggered:
            self._wakeup.succeed()

    def pop_and_wait(self, now: int) -> Optional[Tuple[TerminalRequest, PrecisionSample, int]]:
        """
        Pop the earliest request.

        Args:
            now: Pop time t1 in ticks

        Returns:
            Optional[Tuple]: (request, sample, ticks to wait before submission),
            or None when the queue is empty (idle)
        """
        if not len(self.queue):
            return None
        request = self.queue.pop()
        sample = PrecisionSample(t1=now, t2=request.scheduled, terminal_id=request.terminal_id,
                                 profile=request.profile)
        self.samples.append(sample)
        return request, sample, max(0, sample.d)

    def _dispatch(self):
        env = self.env
        while not self.stopped:
            head = self.queue.peek_time()
            if head is None:
                yield self._wakeup
                self._wakeup = env.event()
                continue
            if not self.clock.eager and head > env.now:
                yield env.timeout(head - env.now) | self._wakeup
                if self._wakeup.triggered:
                    self._wakeup = env.event()
                continue
            popped = self.pop_and_wait(self.clock.observe(env))
            if popped is None:
                continue
            request, _, _ = popped
            if request.scheduled > env.now:
                yield env.timeout(request.scheduled - env.now)
            if self.stopped:
                break
            self.submit(request)


@dataclass(frozen=True)
class PrecisionSummary:
    """Distribution of d in seconds."""

    count: int
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    violations: int

    def as_dict(self) -> Dict[str, float]:
        return {
            "count": self.count,
            "min": self.minimum,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "max": self.maximum,
            "violations": self.violations,
        }


def precision_report(samples) -> PrecisionSummary:
    """
    Summarize precision samples (PrecisionSample objects or raw d values in seconds).

    Raises:
        ReportError: If there are no samples
    """
    values = [to_seconds(s.d) if isinstance(s, PrecisionSample) else float(s) for s in samples]
    if not values:
        raise ReportError("No precision samples to summarize")
    data = np.asarray(values, dtype=float)
    q1, median, q3 = np.percentile(data, [25, 50, 75])
    return PrecisionSummary(
        count=int(data.size),
        minimum=float(data.min()),
        q1=float(q1),
        median=float(median),
        q3=float(q3),
        maximum=float(data.max()),
        violations=int((data < 0).sum()),
    )


def median_decreases(summaries: Dict[int, PrecisionSummary]) -> bool:
    """True when the median reserve strictly shrinks as terminals per worker increase."""
    medians = [summaries[count].median for count in sorted(summaries)]
    return all(later < earlier for earlier, later in zip(medians, medians[1:]))
