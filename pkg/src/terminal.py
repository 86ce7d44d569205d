"""
TPC-C terminal emulation.

A terminal cycles through menu, keying, waiting for the response and thinking,
submitting one request at a time. Delivery requests are deferred: the terminal
moves on as soon as they are dispatched. Requests invalidated by an MVCC
conflict are resubmitted with the same arguments up to a retry cap.
"""

import enum
import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

from .clock import to_ticks
from .config import TIMING_PRESET_NAMES, canonical_timing_preset
from .exceptions import HarnessFault
from .inputs import ProfileArgs, ProfileType, generate_profile_input
from .population import ScaleParameters
from .random_gen import NURandConstants, RandomSource

logger = logging.getLogger(__name__)

MIX_WEIGHTS: Tuple[Tuple[ProfileType, float], ...] = (
    (ProfileType.NEW_ORDER, 0.45),
    (ProfileType.PAYMENT, 0.43),
    (ProfileType.ORDER_STATUS, 0.04),
    (ProfileType.DELIVERY, 0.04),
    (ProfileType.STOCK_LEVEL, 0.04),
)


def _cumulative(weights) -> List[float]:
    total, bounds = 0.0, []
    for _, weight in weights:
        total += weight
        bounds.append(total)
    bounds[-1] = 1.0
    return bounds


MIX_BOUNDS = _cumulative(MIX_WEIGHTS)

MEASURED_TIMING_FACTOR = 0.462
MENU_TIME = 0.1
THINK_CAP_FACTOR = 10.0


def next_profile(rng: RandomSource) -> ProfileType:
    """Draw the next profile from the 45/43/4/4/4 mix."""
    return MIX_WEIGHTS[rng.weighted_index(MIX_BOUNDS)][0]


class Phase(str, enum.Enum):
    MENU = "menu"
    KEYING = "keying"
    AWAITING_RESPONSE = "awaiting-response"
    THINKING = "thinking"


@dataclass(frozen=True)
class ProfileTiming:
    """Per-profile timing in seconds."""

    keying: float
    think_mean: float
    menu: float = MENU_TIME


@dataclass(frozen=True)
class TimingConstraints:
    """Menu, keying and think-time settings for all profiles."""

    timings: Dict[ProfileType, ProfileTiming]
    think_cap_factor: float = THINK_CAP_FACTOR

    def __post_init__(self):
        for profile, timing in self.timings.items():
            if timing.keying < 0 or timing.think_mean < 0 or timing.menu < 0:
                raise ValueError(f"Negative timing for {profile.value}")

    @classmethod
    def tpcc_standard(cls) -> "TimingConstraints":
        return cls({
            ProfileType.NEW_ORDER: ProfileTiming(keying=18.0, think_mean=12.0),
            ProfileType.PAYMENT: ProfileTiming(keying=3.0, think_mean=12.0),
            ProfileType.ORDER_STATUS: ProfileTiming(keying=2.0, think_mean=10.0),
            ProfileType.DELIVERY: ProfileTiming(keying=2.0, think_mean=5.0),
            ProfileType.STOCK_LEVEL: ProfileTiming(keying=2.0, think_mean=5.0),
        })

    @classmethod
    def measured(cls) -> "TimingConstraints":
        """TPC-C timings scaled so that ten terminals issue about one request per second."""
        return cls.tpcc_standard().scaled(MEASURED_TIMING_FACTOR)

    @classmethod
    def for_preset(cls, name: str, scale: float = 1.0) -> "TimingConstraints":
        name = canonical_timing_preset(name)
        if name not in TIMING_PRESET_NAMES:
            raise ValueError(f"Unknown timing preset '{name}', expected one of {TIMING_PRESET_NAMES}")
        base = cls.tpcc_standard() if name == "tpcc-standard" else cls.measured()
        return base if scale == 1.0 else base.scaled(scale)

    def scaled(self, factor: float) -> "TimingConstraints":
        """Multiply keying and think times (menu time unchanged)."""
        return replace(self, timings={
            profile: ProfileTiming(timing.keying * factor, timing.think_mean * factor, timing.menu)
            for profile, timing in self.timings.items()
        })

    def mean_cycle(self) -> float:
        """Expected menu + keying + think time of one cycle, in seconds."""
        return sum(weight * (self.timings[p].menu + self.timings[p].keying + self.timings[p].think_mean)
                   for p, weight in MIX_WEIGHTS)

    def lead_time(self, profile: ProfileType) -> int:
        timing = self.timings[profile]
        return to_ticks(timing.menu + timing.keying)

    def think_time(self, profile: ProfileType, rng: RandomSource) -> int:
        return to_ticks(rng.exponential(self.timings[profile].think_mean, self.think_cap_factor))


@dataclass(frozen=True)
class TerminalRequest:
    """One attempt of a profile invocation scheduled by a terminal."""

    terminal_id: int
    seq: int
    retry: int
    profile: ProfileType
    args: ProfileArgs
    scheduled: int
    created: int
    deferred: bool = False

    @property
    def tx_id(self) -> str:
        return f"t{self.terminal_id}-{self.seq}-{self.retry}"

    @property
    def business_id(self) -> Tuple[int, int]:
        return (self.terminal_id, self.seq)


@dataclass(frozen=True)
class Dispatched:
    """The multiplexer handed the request to the ledger."""
    request: TerminalRequest


@dataclass(frozen=True)
class Response:
    """The attempt reached a final status; `conflict` marks an MVCC invalidation."""
    request: TerminalRequest
    conflict: bool = False


@dataclass
class TerminalStats:
    requests: int = 0
    responses: int = 0
    retries: int = 0
    abandoned: int = 0
    deferred: int = 0


class Terminal:
    """Passive terminal state machine driven by its worker's multiplexer."""

    def __init__(self, terminal_id: int, home_w: int, home_d: int, warehouse_count: int,
                 rng: RandomSource, timing: TimingConstraints,
                 scale: Optional[ScaleParameters] = None,
                 constants: Optional[NURandConstants] = None,
                 retry_cap: int = 5, backoff: int = 0):
        self.terminal_id = terminal_id
        self.home_w = home_w
        self.home_d = home_d
        self.warehouse_count = warehouse_count
        self.rng = rng
        self.timing = timing
        self.scale = scale or ScaleParameters.make(warehouse_count)
        self.constants = constants or NURandConstants(0, 0, 0)
        self.retry_cap = retry_cap
        self.backoff = backoff
        self.client_id = f"t{terminal_id}"
        self.phase = Phase.MENU
        self.in_flight: Optional[TerminalRequest] = None
        self.deferred: Dict[Tuple[int, int], TerminalRequest] = {}
        self.stats = TerminalStats()
        self._seq = 0

    def _new_request(self, now: int, delay: int) -> TerminalRequest:
        profile = next_profile(self.rng)
        scheduled = now + delay + self.timing.lead_time(profile)
        args = generate_profile_input(
            profile, self.warehouse_count, self.home_w, self.rng, scale=self.scale,
            constants=self.constants, now=scheduled, home_d=self.home_d, client_id=self.client_id,
        )
        self._seq += 1
        request = TerminalRequest(
            terminal_id=self.terminal_id,
            seq=self._seq,
            retry=0,
            profile=profile,
            args=args,
            scheduled=scheduled,
            created=now,
            deferred=profile is ProfileType.DELIVERY,
        )
        self.in_flight = request
        self.phase = Phase.KEYING
        self.stats.requests += 1
        return request

    def start(self, now: int) -> TerminalRequest:
        """First request of the terminal: menu and keying time from now."""
        return self._new_request(now, 0)

    def can_retry(self, request: TerminalRequest) -> bool:
        return request.retry < self.retry_cap

    def on_invalidated(self, request: TerminalRequest, now: int) -> TerminalRequest:
        """Resubmit a conflicted request with identical arguments after the backoff."""
        retry = replace(request, retry=request.retry + 1, scheduled=now + self.backoff, created=now)
        self.stats.retries += 1
        if request.deferred:
            self.deferred[retry.business_id] = retry
        else:
            self.in_flight = retry
            self.phase = Phase.KEYING
        return retry

    def complete_deferred(self, request: TerminalRequest) -> None:
        if self.deferred.pop(request.business_id, None) is None:
            raise HarnessFault(f"Terminal {self.terminal_id} has no deferred request {request.tx_id}")

    def advance(self, event, now: int) -> Optional[TerminalRequest]:
        """
        Feed a dispatch or response event to the terminal.

        Args:
            event: Dispatched or Response
            now: Current time in ticks

        Returns:
            Optional[TerminalRequest]: The next attempt to schedule, if any

        Raises:
            HarnessFault: If the event does not match the terminal's state
        """
        request = event.request
        if isinstance(event, Dispatched):
            if request.deferred:
                if request.retry == 0:
                    # Deferred delivery: the cycle continues without the response.
                    if self.in_flight is None or self.in_flight.business_id != request.business_id:
                        raise HarnessFault(f"Terminal {self.terminal_id} dispatched unknown {request.tx_id}")
                    self.deferred[request.business_id] = request
                    self.stats.deferred += 1
                    return self._new_request(now, self.timing.think_time(request.profile, self.rng))
                return None
            if self.in_flight is None or self.in_flight.tx_id != request.tx_id:
                raise HarnessFault(f"Terminal {self.terminal_id} dispatched unknown {request.tx_id}")
            self.phase = Phase.AWAITING_RESPONSE
            return None

        if not isinstance(event, Response):
            raise HarnessFault(f"Unexpected terminal event {event!r}")
        if request.deferred:
            current = self.deferred.get(request.business_id)
            if current is None or current.tx_id != request.tx_id:
                raise HarnessFault(f"Terminal {self.terminal_id} got response for unknown {request.tx_id}")
            if event.conflict and self.can_retry(request):
                return self.on_invalidated(request, now)
            self.complete_deferred(request)
            if event.conflict and self.retry_cap > 0:
                self.stats.abandoned += 1
            return None

        if self.in_flight is None or self.in_flight.tx_id != request.tx_id:
            raise HarnessFault(f"Terminal {self.terminal_id} got response for unknown {request.tx_id}")
        self.stats.responses += 1
        if event.conflict and self.can_retry(request):
            return self.on_invalidated(request, now)
        if event.conflict and self.retry_cap > 0:
            self.stats.abandoned += 1
        self.in_flight = None
        self.phase = Phase.THINKING
        return self._new_request(now, self.timing.think_time(request.profile, self.rng))


def assign_home(terminal_id: int, warehouse_count: int, terminals_per_warehouse: int) -> Tuple[int, int]:
    """
    Home warehouse and district of a terminal.

    Terminals fill warehouses in order, terminals_per_warehouse at a time; the
    district cycles through 1..10 within a warehouse.
    """
    per_warehouse = max(1, terminals_per_warehouse)
    index = terminal_id - 1
    home_w = (index // per_warehouse) % max(1, warehouse_count) + 1
    home_d = index % per_warehouse % 10 + 1
    return home_w, home_d
