"""
Simulation time base and clock modes.

Simulation time is measured in integer ticks (microseconds) so that virtual-clock
scheduling is exact. Two clocks are offered: a virtual clock that runs the event
loop as fast as possible, and a wall clock that paces it against real time.
"""

import enum
import time
from abc import ABC, abstractmethod

import simpy
import simpy.rt

TICKS_PER_SECOND = 1_000_000


def to_ticks(seconds: float) -> int:
    """Convert seconds to integer ticks (rounded to the nearest microsecond)."""
    return int(round(seconds * TICKS_PER_SECOND))


def to_seconds(ticks: int) -> float:
    """Convert ticks back to seconds."""
    return ticks / TICKS_PER_SECOND


class ClockMode(str, enum.Enum):
    """Supported clock modes."""
    VIRTUAL = "virtual"
    WALL = "wall"


class SimulationClock(ABC):
    """Creates event environments and reports the dispatcher's pop time."""

    mode: ClockMode
    # Eager clocks pop a request as soon as the dispatcher is free and then wait.
    eager: bool

    @abstractmethod
    def create_environment(self) -> simpy.Environment:
        """Create a fresh event environment starting at tick 0."""

    @abstractmethod
    def observe(self, env: simpy.Environment) -> int:
        """Current time as seen by the dispatcher, in ticks."""


class VirtualClock(SimulationClock):
    """Deterministic clock: time only advances through scheduled events."""

    mode = ClockMode.VIRTUAL
    eager = False

    def create_environment(self) -> simpy.Environment:
        return simpy.Environment(initial_time=0)

    def observe(self, env: simpy.Environment) -> int:
        return env.now


class WallClock(SimulationClock):
    """
    Real-time clock.

    Simulation time advances with the wall clock, optionally accelerated by
    `speedup`. `observe` reads the real clock, so dispatcher lag shows up as
    negative scheduling precision.
    """

    mode = ClockMode.WALL
    eager = True

    def __init__(self, speedup: float = 1.0):
        if speedup <= 0:
            raise ValueError(f"speedup must be positive, got {speedup}")
        self.speedup = speedup
        self._origin = None

    def create_environment(self) -> simpy.Environment:
        factor = 1.0 / (TICKS_PER_SECOND * self.speedup)
        env = simpy.rt.RealtimeEnvironment(initial_time=0, factor=factor, strict=False)
        self._origin = time.perf_counter()
        return env

    def observe(self, env: simpy.Environment) -> int:
        if self._origin is None:
            return env.now
        elapsed = time.perf_counter() - self._origin
        return int(elapsed * self.speedup * TICKS_PER_SECOND)


def make_clock(mode: str, speedup: float = 1.0) -> SimulationClock:
    """Build a clock for a mode name ("virtual" or "wall")."""
    mode = ClockMode(mode)
    if mode is ClockMode.WALL:
        return WallClock(speedup)
    return VirtualClock()
