"""
Report Generator Module

Writes benchmark results to disk: the per-attempt CSV dump, a structured text
report of the run summaries, gnuplot-compatible data files and PNG figures for
request rate, scheduling precision and the error profile.
"""

import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import matplotlib
matplotlib.use('Agg')  # Use non-interactive backend
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from .exceptions import ReportError  # noqa: E402
from .ledger import TxStatus  # noqa: E402
from .metrics import COLUMNS, RunSummary, error_profile  # noqa: E402

logger = logging.getLogger(__name__)

RECORDS_FILE = "records.csv"
SUMMARY_FILE = "summary.txt"
SUMMARY_JSON = "summary.json"

STATUS_COLORS = {
    TxStatus.COMMITTED.value: '#27ae60',
    TxStatus.BUSINESS_ROLLBACK.value: '#95a5a6',
    TxStatus.ENDORSEMENT_ERROR.value: '#34495e',
    TxStatus.MVCC_CONFLICT.value: '#e67e22',
    TxStatus.ENDORSEMENT_TIMEOUT.value: '#8e44ad',
    TxStatus.COMMIT_TIMEOUT.value: '#2980b9',
    TxStatus.ABANDONED.value: '#c0392b',
}


def load_records(path) -> pd.DataFrame:
    """
    Read a record dump written by `ReportGenerator.export_records`.

    Raises:
        ReportError: If the file is missing or lacks the documented columns
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, keep_default_na=True)
    except (OSError, pd.errors.ParserError) as exc:
        raise ReportError(f"Cannot read records: {exc}", str(path)) from exc
    missing = [column for column in COLUMNS if column not in frame.columns]
    if missing:
        raise ReportError(f"Record file lacks columns {missing}", str(path))
    frame["config"] = frame["config"].fillna("").astype(str)
    return frame[COLUMNS]


class ReportGenerator:
    """Writes run artifacts into one output directory."""

    def __init__(self, output_dir):
        """Initialize the generator for `output_dir` (created on demand)."""
        self.output_dir = Path(output_dir)

    def _path(self, name: str) -> Path:
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ReportError(f"Cannot create output directory: {exc}", str(self.output_dir)) from exc
        return self.output_dir / name

    def _write_text(self, name: str, text: str) -> Path:
        path = self._path(name)
        try:
            path.write_text(text, encoding='utf-8')
        except OSError as exc:
            raise ReportError(f"Cannot write report: {exc}", str(path)) from exc
        return path

    def export_records(self, records: pd.DataFrame, name: str = RECORDS_FILE) -> Path:
        """
        Write the per-attempt records as CSV in the documented column order.

        An empty frame produces a header-only file.
        """
        path = self._path(name)
        frame = records.reindex(columns=COLUMNS)
        try:
            frame.to_csv(path, index=False, float_format='%.6f', lineterminator='\n')
        except OSError as exc:
            raise ReportError(f"Cannot write records: {exc}", str(path)) from exc
        logger.info("Wrote %d record(s) to %s", len(frame), path)
        return path

    def write_summary(self, summaries: Sequence[RunSummary], title: str = "TPC-C ledger benchmark") -> Path:
        """Write the structured text report plus its JSON twin."""
        lines = ["=" * 60, title, "=" * 60]
        for summary in summaries:
            lines.extend(self._summary_section(summary))
        self._write_text(SUMMARY_JSON, json.dumps([s.to_dict() for s in summaries], indent=2, sort_keys=True) + "\n")
        return self._write_text(SUMMARY_FILE, "\n".join(lines) + "\n")

    def _summary_section(self, summary: RunSummary) -> List[str]:
        lines = [
            "",
            f"[{summary.label or 'run'}]",
            f"terminals:        {summary.terminals}",
            f"duration (s):     {summary.duration:.3f}",
            f"attempts:         {summary.attempts}",
            f"requests:         {summary.requests}",
            f"retries:          {summary.retries}",
            f"tpmC:             {summary.tpmc:.3f}",
            f"throughput (tps): {summary.tps:.4f}",
            f"goodput (rps):    {summary.goodput:.4f}",
            f"assessment:       {self._interpret_conflicts(summary.status_fractions)}",
            "profile mix:",
        ]
        for profile, count in summary.profile_counts.items():
            lines.append(f"  {profile:<12} {count:>8}  {summary.profile_fractions[profile]:.4f}")
        lines.append("status:")
        for status, count in summary.status_counts.items():
            lines.append(f"  {status:<20} {count:>8}  {summary.status_fractions[status]:.4f}")
        if summary.latency_quartiles:
            lines.append("latency quartiles (s, committed):")
            for profile, (q1, median, q3) in summary.latency_quartiles.items():
                lines.append(f"  {profile:<12} {q1:.4f} {median:.4f} {q3:.4f}")
        if summary.access_means:
            lines.append("mean access per committed attempt (reads/writes/ranges/bytes read/bytes written):")
            for profile, means in summary.access_means.items():
                values = " ".join(f"{means[key]:.1f}" for key in
                                  ("read_count", "write_count", "range_read_count", "bytes_read", "bytes_written"))
                lines.append(f"  {profile:<12} {values}")
        if summary.precision:
            p = summary.precision
            lines.append(f"precision (s): min {p['min']:.6f} q1 {p['q1']:.6f} median {p['median']:.6f} "
                         f"q3 {p['q3']:.6f} max {p['max']:.6f} violations {p['violations']}")
        return lines

    def _interpret_conflicts(self, fractions: Dict[str, float]) -> str:
        """Short reading of how much of the load the ledger invalidated."""
        invalidated = fractions.get(TxStatus.MVCC_CONFLICT.value, 0.0) + fractions.get(TxStatus.ABANDONED.value, 0.0)
        timeouts = (fractions.get(TxStatus.ENDORSEMENT_TIMEOUT.value, 0.0)
                    + fractions.get(TxStatus.COMMIT_TIMEOUT.value, 0.0))
        if timeouts >= 0.5:
            return "saturated (timeouts dominate)"
        if invalidated >= 0.4:
            return "contended (about half invalidated)"
        if invalidated >= 0.1:
            return "moderate contention"
        return "low contention"

    def write_rate_data(self, summaries: Iterable[RunSummary], name: str = "rate.dat") -> Path:
        """Columns: terminals, attempts per second, goodput, tpmC."""
        lines = ["# terminals tps goodput tpmC"]
        lines += [f"{s.terminals} {s.tps:.6f} {s.goodput:.6f} {s.tpmc:.6f}" for s in summaries]
        return self._write_text(name, "\n".join(lines) + "\n")

    def write_precision_data(self, summaries: Iterable[RunSummary], name: str = "precision.dat") -> Path:
        """Columns: terminals, min, q1, median, q3, max, violations (seconds)."""
        lines = ["# terminals min q1 median q3 max violations"]
        for s in summaries:
            if s.precision:
                p = s.precision
                lines.append(f"{s.terminals} {p['min']:.6f} {p['q1']:.6f} {p['median']:.6f} "
                             f"{p['q3']:.6f} {p['max']:.6f} {p['violations']}")
        return self._write_text(name, "\n".join(lines) + "\n")

    def write_error_profile(self, records: pd.DataFrame, name: str = "error_profile") -> pd.DataFrame:
        """Write the per-configuration status fractions as CSV and .dat; returns the table."""
        table = error_profile(records)
        csv_path = self._path(f"{name}.csv")
        try:
            table.to_csv(csv_path, float_format='%.6f', lineterminator='\n')
        except OSError as exc:
            raise ReportError(f"Cannot write error profile: {exc}", str(csv_path)) from exc
        header = "# config " + " ".join(table.columns)
        rows = [f"{index} " + " ".join(f"{value:.6f}" for value in row)
                for index, row in zip(table.index, table.to_numpy())]
        self._write_text(f"{name}.dat", "\n".join([header] + rows) + "\n")
        return table

    def plot_rate(self, summaries: Sequence[RunSummary], name: str = "rate.png") -> Optional[Path]:
        if not summaries:
            return None
        terminals = [s.terminals for s in summaries]
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(terminals, [s.tps for s in summaries], marker='o', color='#2c3e50', label='submitted')
        ax.plot(terminals, [s.goodput for s in summaries], marker='s', color='#27ae60', label='goodput')
        ax.set_xlabel('Terminals')
        ax.set_ylabel('Transactions per second')
        ax.grid(True, alpha=0.3)
        ax.legend()
        return self._save(fig, name)

    def plot_precision(self, samples_by_terminals: Dict[int, Sequence[float]],
                       name: str = "precision.png") -> Optional[Path]:
        """Boxplot of precision d (seconds) per terminal count."""
        if not samples_by_terminals:
            return None
        counts = sorted(samples_by_terminals)
        fig, ax = plt.subplots(figsize=(8, 4))
        ax.boxplot([list(samples_by_terminals[c]) for c in counts], showfliers=False)
        ax.set_xticks(range(1, len(counts) + 1))
        ax.set_xticklabels([str(c) for c in counts], rotation=45)
        ax.axhline(0.0, color='#e74c3c', linewidth=1)
        ax.set_xlabel('Terminals per worker')
        ax.set_ylabel('Precision d (s)')
        return self._save(fig, name)

    def plot_error_profile(self, table: pd.DataFrame, name: str = "error_profile.png") -> Optional[Path]:
        """Stacked status fractions per configuration."""
        if table.empty:
            return None
        statuses = [status for status in STATUS_COLORS if status in table.columns]
        fig, ax = plt.subplots(figsize=(9, 4))
        bottom = [0.0] * len(table)
        positions = range(len(table))
        for status in statuses:
            values = table[status].tolist()
            ax.bar(positions, values, bottom=bottom, color=STATUS_COLORS[status], label=status)
            bottom = [b + v for b, v in zip(bottom, values)]
        ax.set_xticks(list(positions))
        ax.set_xticklabels([str(label) for label in table.index], rotation=45, ha='right')
        ax.set_ylim(0, 1)
        ax.set_ylabel('Fraction of attempts')
        ax.legend(fontsize=7, loc='upper left', bbox_to_anchor=(1.0, 1.0))
        return self._save(fig, name)

    def _save(self, fig, name: str) -> Path:
        path = self._path(name)
        try:
            fig.tight_layout()
            fig.savefig(path, dpi=120)
        except OSError as exc:
            raise ReportError(f"Cannot write figure: {exc}", str(path)) from exc
        finally:
            plt.close(fig)
        return path
