"""
Terminal-count sweep.

Runs one execution round per grid point, each on a fresh copy of the same
loaded world state, and collects the error profile across the grid.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import pandas as pd

from .clock import SimulationClock, make_clock, to_seconds
from .config import Config
from .harness import BenchmarkManager, BenchmarkPlan, RoundResult, populate_directly, prepare_round
from .metrics import MetricsCollector, RunSummary, error_profile
from .multiplexer import PrecisionSummary, median_decreases, precision_report
from .world_state import WorldState

logger = logging.getLogger(__name__)


def point_label(index: int, terminals: int) -> str:
    """Grid points are labelled by position and terminal count ("03-40")."""
    return f"{index:02d}-{terminals}"


@dataclass
class SweepResult:
    rounds: List[RoundResult] = field(default_factory=list)

    @property
    def summaries(self) -> List[RunSummary]:
        return [result.summary for result in self.rounds]

    def records(self) -> pd.DataFrame:
        collector = MetricsCollector()
        for result in self.rounds:
            collector.extend(result.collector)
        return collector.to_frame()

    def error_profile(self) -> pd.DataFrame:
        return error_profile(self.records())

    def precision_by_terminals(self) -> Dict[int, List[float]]:
        """Precision samples in seconds keyed by terminals per worker."""
        by_count: Dict[int, List[float]] = {}
        for result in self.rounds:
            per_worker = max(1, result.terminals // max(1, result.worker_count))
            by_count.setdefault(per_worker, []).extend(to_seconds(s.d) for s in result.collector.samples)
        return by_count

    def precision_summaries(self) -> Dict[int, PrecisionSummary]:
        return {count: precision_report(samples)
                for count, samples in sorted(self.precision_by_terminals().items()) if samples}

    def precision_tightens(self) -> bool:
        """True when the median precision strictly drops as terminals per worker grow."""
        summaries = self.precision_summaries()
        return len(summaries) > 1 and median_decreases(summaries)


class SweepRunner:
    """Runs the terminal-count grid of a configuration."""

    def __init__(self, config: Config, clock: Optional[SimulationClock] = None):
        self.config = config
        self.clock = clock or make_clock(config.clock.value, config.speedup)

    def base_state(self) -> WorldState:
        """Loaded state shared by every point (populated directly)."""
        plan = BenchmarkPlan.from_config(self.config, load=False)
        return populate_directly(WorldState(), prepare_round(plan, 0))

    def run(self, base: Optional[WorldState] = None, grid: Optional[Sequence[int]] = None) -> SweepResult:
        grid = tuple(self.config.sweep_terminals if grid is None else grid)
        base = base if base is not None else self.base_state()
        result = SweepResult()
        logger.info("Sweep over %d configuration(s): %s", len(grid), list(grid))
        for index, terminals in enumerate(grid):
            config = self.config.with_terminals(terminals)
            plan = BenchmarkPlan.from_config(config, load=False, label=point_label(index, terminals))
            prepared = prepare_round(plan, 0)
            manager = BenchmarkManager(config, self.clock)
            round_result = manager.run_execution_round(base.copy(), prepared, plan.rounds[0])
            result.rounds.append(round_result)
            fractions = round_result.summary.status_fractions
            logger.info("Point %s: tpmC %.1f, mvcc-conflict %.3f", prepared.round_label,
                        round_result.summary.tpmc, fractions.get("mvcc-conflict", 0.0))
        return result
