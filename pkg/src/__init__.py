"""
TPC-C Ledger Benchmark - Core Source Package

This package contains the simulated execute-order-validate ledger, the TPC-C
contract and data model, the terminal workload generator and the benchmark harness.
"""

from .config import Config, load_config
from .harness import BenchmarkManager, BenchmarkPlan
from .ledger import LedgerNetwork
from .report_generator import ReportGenerator
from .snapshot import SnapshotStore
from .sweep import SweepRunner

__version__ = "1.0.0"
__author__ = "TPC-C Ledger Benchmark Team"

__all__ = [
    "Config",
    "load_config",
    "BenchmarkManager",
    "BenchmarkPlan",
    "LedgerNetwork",
    "ReportGenerator",
    "SnapshotStore",
    "SweepRunner",
]
