"""
Benchmark metrics.

Collects one record per transaction attempt and derives the run-level figures:
tpmC, throughput and goodput, latency quartiles, the error profile and the
scheduling-precision summary. Records are handled as pandas DataFrames.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from .clock import to_seconds
from .inputs import ProfileType
from .ledger import AttemptResult, TxStatus
from .multiplexer import PrecisionSample, precision_report
from .terminal import TerminalRequest

logger = logging.getLogger(__name__)

COLUMNS = [
    "tx_id", "terminal_id", "seq", "retry", "worker_id", "profile", "status",
    "created", "submitted", "endorsed", "ordered", "finished", "block_no", "tx_index",
    "read_count", "write_count", "range_read_count", "bytes_read", "bytes_written", "config",
]

STATUS_ORDER = [status.value for status in TxStatus]
PROFILE_ORDER = [profile.value for profile in ProfileType]


def _seconds(ticks: Optional[int]) -> Optional[float]:
    return None if ticks is None else to_seconds(ticks)


@dataclass
class MetricsRecord:
    """Lifecycle of one transaction attempt (times in seconds)."""

    tx_id: str
    terminal_id: int
    seq: int
    retry: int
    worker_id: int
    profile: str
    status: str
    created: float
    submitted: float
    endorsed: Optional[float]
    ordered: Optional[float]
    finished: float
    block_no: Optional[int]
    tx_index: Optional[int]
    read_count: int = 0
    write_count: int = 0
    range_read_count: int = 0
    bytes_read: int = 0
    bytes_written: int = 0
    config: str = ""

    @classmethod
    def from_attempt(cls, request: TerminalRequest, result: AttemptResult, worker_id: int,
                     status: Optional[TxStatus] = None, config: str = "") -> "MetricsRecord":
        stats = result.stats
        return cls(
            tx_id=result.tx_id,
            terminal_id=request.terminal_id,
            seq=request.seq,
            retry=request.retry,
            worker_id=worker_id,
            profile=request.profile.value,
            status=(status or result.status).value,
            created=to_seconds(request.created),
            submitted=to_seconds(result.submitted),
            endorsed=_seconds(result.endorsed),
            ordered=_seconds(result.ordered),
            finished=to_seconds(result.finished),
            block_no=result.block_no,
            tx_index=result.tx_index,
            read_count=stats.read_count,
            write_count=stats.write_count,
            range_read_count=stats.range_read_count,
            bytes_read=stats.bytes_read,
            bytes_written=stats.bytes_written,
            config=config,
        )


@dataclass
class MetricsCollector:
    """Append-only sink for attempt records and precision samples."""

    records: List[MetricsRecord] = field(default_factory=list)
    precision: Dict[int, List[PrecisionSample]] = field(default_factory=dict)

    def add(self, record: MetricsRecord) -> None:
        self.records.append(record)

    def add_samples(self, worker_id: int, samples: Iterable[PrecisionSample]) -> None:
        self.precision.setdefault(worker_id, []).extend(samples)

    def extend(self, other: "MetricsCollector") -> None:
        self.records.extend(other.records)
        for worker_id, samples in other.precision.items():
            self.add_samples(worker_id, samples)

    @property
    def samples(self) -> List[PrecisionSample]:
        return [sample for worker_id in sorted(self.precision) for sample in self.precision[worker_id]]

    def to_frame(self) -> pd.DataFrame:
        return records_frame(self.records)


def records_frame(records: Iterable[MetricsRecord]) -> pd.DataFrame:
    """DataFrame in the documented column order, sorted deterministically."""
    frame = pd.DataFrame([asdict(record) for record in records], columns=COLUMNS)
    if frame.empty:
        return frame
    frame = frame.sort_values(["submitted", "terminal_id", "seq", "retry", "tx_id"], kind="mergesort")
    return frame.reset_index(drop=True)


def _as_frame(records) -> pd.DataFrame:
    if isinstance(records, pd.DataFrame):
        return records
    if isinstance(records, MetricsCollector):
        return records.to_frame()
    return records_frame(records)


def compute_tpmc(records, window: Union[float, Tuple[float, float]]) -> float:
    """
    Committed New Orders per minute.

    A business request is counted once however many attempts it took.

    Args:
        records: Records (DataFrame, collector or iterable of MetricsRecord)
        window: Duration in seconds starting at 0, or (start, end) in seconds

    Returns:
        float: tpmC over the window

    Raises:
        ValueError: If the window has zero or negative length
    """
    start, end = (0.0, float(window)) if not isinstance(window, tuple) else map(float, window)
    if end <= start:
        raise ValueError(f"Window must have positive length, got [{start}, {end}]")
    frame = _as_frame(records)
    if frame.empty:
        return 0.0
    committed = frame[
        (frame["profile"] == ProfileType.NEW_ORDER.value)
        & (frame["status"] == TxStatus.COMMITTED.value)
        & (frame["finished"] >= start)
        & (frame["finished"] <= end)
    ]
    unique = committed.drop_duplicates(subset=["terminal_id", "seq"])
    return len(unique) / ((end - start) / 60.0)


@dataclass
class RunSummary:
    """Aggregated results of one execution round."""

    label: str
    duration: float
    terminals: int
    attempts: int
    requests: int
    tpmc: float
    tps: float
    goodput: float
    retries: int
    profile_counts: Dict[str, int]
    profile_fractions: Dict[str, float]
    status_counts: Dict[str, int]
    status_fractions: Dict[str, float]
    latency_quartiles: Dict[str, List[float]]
    access_means: Dict[str, Dict[str, float]]
    precision: Optional[Dict[str, float]] = None

    def to_dict(self) -> Dict:
        return asdict(self)


def summarize(records, duration: float, label: str = "", terminals: int = 0,
              samples: Optional[Iterable[PrecisionSample]] = None) -> RunSummary:
    """
    Build the run summary.

    tps counts every attempt (retries included); goodput counts committed
    business requests once each.
    """
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {duration}")
    frame = _as_frame(records)
    samples = list(samples or [])
    precision = precision_report(samples).as_dict() if samples else None
    if frame.empty:
        empty_status = {status: 0 for status in STATUS_ORDER}
        return RunSummary(label, duration, terminals, 0, 0, 0.0, 0.0, 0.0, 0,
                          {p: 0 for p in PROFILE_ORDER}, {p: 0.0 for p in PROFILE_ORDER},
                          empty_status, {status: 0.0 for status in STATUS_ORDER}, {}, {}, precision)

    attempts = len(frame)
    first_attempts = frame[frame["retry"] == 0]
    profile_counts = first_attempts["profile"].value_counts().reindex(PROFILE_ORDER, fill_value=0)
    status_counts = frame["status"].value_counts().reindex(STATUS_ORDER, fill_value=0)
    committed = frame[frame["status"] == TxStatus.COMMITTED.value]
    goodput_requests = len(committed.drop_duplicates(subset=["terminal_id", "seq"]))

    latency_quartiles = {}
    access_means = {}
    for profile, group in committed.groupby("profile", sort=True):
        latency = (group["finished"] - group["submitted"]).to_numpy(dtype=float)
        latency_quartiles[profile] = [float(v) for v in np.percentile(latency, [25, 50, 75])]
        access_means[profile] = {
            column: float(group[column].mean())
            for column in ("read_count", "write_count", "range_read_count", "bytes_read", "bytes_written")
        }

    requests = len(first_attempts)
    return RunSummary(
        label=label,
        duration=duration,
        terminals=terminals,
        attempts=attempts,
        requests=requests,
        tpmc=compute_tpmc(frame, duration),
        tps=attempts / duration,
        goodput=goodput_requests / duration,
        retries=int((frame["retry"] > 0).sum()),
        profile_counts={k: int(v) for k, v in profile_counts.items()},
        profile_fractions={k: (int(v) / requests if requests else 0.0) for k, v in profile_counts.items()},
        status_counts={k: int(v) for k, v in status_counts.items()},
        status_fractions={k: int(v) / attempts for k, v in status_counts.items()},
        latency_quartiles=latency_quartiles,
        access_means=access_means,
        precision=precision,
    )


def error_profile(records, grouping: str = "config") -> pd.DataFrame:
    """
    Status fractions per configuration.

    Returns one row per configuration (in order of first appearance) with a
    column per status plus `invalidated` (mvcc-conflict and abandoned
    attempts together). Business rollbacks and endorsement errors keep their
    own columns and never count as invalidated.
    """
    frame = _as_frame(records)
    columns = STATUS_ORDER + ["invalidated"]
    if frame.empty:
        return pd.DataFrame(columns=columns, dtype=float)
    order = list(dict.fromkeys(frame[grouping]))
    table = pd.crosstab(frame[grouping], frame["status"], normalize="index")
    table = table.reindex(index=order, columns=STATUS_ORDER, fill_value=0.0)
    table["invalidated"] = table[TxStatus.MVCC_CONFLICT.value] + table[TxStatus.ABANDONED.value]
    table.index.name = grouping
    table.columns.name = None
    return table
