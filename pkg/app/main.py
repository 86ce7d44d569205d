#!/usr/bin/env python3
"""
TPC-C Ledger Benchmark - Main Entry Point

Loads the TPC-C population into the simulated ledger, runs terminal workloads
against it, sweeps terminal counts and renders reports.

Usage:
    python app/main.py load --config configs/smoke.json
    python app/main.py run --config configs/measured.json --out output/run
    python app/main.py sweep --config configs/measured.json --out output/sweep
    python app/main.py report --records output/run/records.csv --out output/report
"""

import argparse
import logging
import logging.config
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional

sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src.clock import ClockMode  # noqa: E402
from src.config import Config, load_config, save_config  # noqa: E402
from src.exceptions import TpccLedgerError  # noqa: E402
from src.harness import (BenchmarkManager, BenchmarkPlan, DrivingMode, RoundSpec,  # noqa: E402
                         populate_directly, prepare_round)
from src.ledger import write_blocks  # noqa: E402
from src.metrics import RunSummary, summarize  # noqa: E402
from src.registry import audit_state  # noqa: E402
from src.report_generator import ReportGenerator, load_records  # noqa: E402
from src.snapshot import SnapshotStore  # noqa: E402
from src.sweep import SweepRunner  # noqa: E402
from src.world_state import WorldState  # noqa: E402

ROOT = Path(__file__).resolve().parent.parent
LOGGING_CONFIG = ROOT / 'logging.ini'
SNAPSHOT_FILE = 'snapshot.sqlite'

logger = logging.getLogger('src.cli')


def setup_logging():
    """Configure logging from logging.ini; TPCC_LOG_LEVEL overrides the root level."""
    if LOGGING_CONFIG.exists():
        logging.config.fileConfig(LOGGING_CONFIG, disable_existing_loggers=False)
    else:
        logging.basicConfig(level=logging.INFO)
    level = os.environ.get('TPCC_LOG_LEVEL')
    if level:
        logging.getLogger().setLevel(level.upper())
        logging.getLogger('src').setLevel(level.upper())


def print_banner():
    """Print the application banner."""
    print("=" * 60)
    print("⛓️  TPC-C LEDGER BENCHMARK")
    print("=" * 60)
    print("TPC-C on a simulated execute-order-validate ledger")
    print("=" * 60)


def print_config(config: Config):
    workload = config.workload
    print("\n⚙️  CONFIGURATION")
    print("-" * 40)
    print(f"🏭 Warehouses: {workload.warehouses} (scale factor {workload.scale_factor})")
    print(f"🖥️  Terminals: {workload.total_terminals} on {config.workers} worker(s)")
    print(f"⏱️  Timing preset: {workload.timing_preset}, clock: {config.clock.value}")
    print(f"🧱 Blocks: {config.ledger.block_time * 1000:.0f} ms / {config.ledger.max_tx} tx, "
          f"latency preset {config.ledger.latency_preset}")
    print(f"🎲 Seed: {config.seed}")


def print_summary(summary: RunSummary):
    """
    Print a run summary in a formatted way.

    Args:
        summary (RunSummary): Summary of one execution round
    """
    print(f"\n📊 RESULTS [{summary.label}]")
    print("-" * 40)
    print(f"📈 tpmC: {summary.tpmc:.2f}")
    print(f"🔁 Attempts: {summary.attempts} ({summary.retries} retries), requests: {summary.requests}")
    print(f"🚀 Throughput: {summary.tps:.3f} tps, goodput: {summary.goodput:.3f} rps")
    for status, fraction in summary.status_fractions.items():
        if summary.status_counts[status]:
            emoji = "✅" if status == "committed" else "⚠️" if status == "business-rollback" else "❌"
            print(f"{emoji} {status}: {summary.status_counts[status]} ({fraction:.1%})")
    if summary.precision:
        print(f"🎯 Precision median: {summary.precision['median']:.6f} s, "
              f"violations: {summary.precision['violations']}")


def config_overrides(args) -> Dict:
    """Flat config keys taken from command-line flags (unset flags are None)."""
    return {
        'warehouses': args.warehouses,
        'terminals_per_warehouse': args.terminals_per_warehouse,
        'terminals': getattr(args, 'terminals', None),
        'workers': args.workers,
        'seed': args.seed,
        'clock': args.clock,
        'block_time_ms': args.block_time_ms,
        'output_dir': args.out,
        'duration': getattr(args, 'duration', None),
        'speedup': getattr(args, 'speedup', None),
        'direct_load': True if getattr(args, 'direct', False) else None,
        'snapshot': getattr(args, 'snapshot', None),
        'sweep_terminals': getattr(args, 'grid', None),
    }


def snapshot_path(config: Config) -> Path:
    return Path(config.snapshot) if config.snapshot else Path(config.output_dir) / SNAPSHOT_FILE


def command_load(config: Config, args) -> int:
    state = WorldState()
    if config.direct_load:
        print("\n📦 Populating the world state directly...")
        plan = BenchmarkPlan.from_config(config, load=False)
        populate_directly(state, prepare_round(plan, 0))
    else:
        print("\n📦 Loading the population through the ledger...")
        plan = BenchmarkPlan(config, (RoundSpec('load', 1, DrivingMode.COMPLETION_SIGNAL),))
        result = BenchmarkManager(config).run(plan, state)
        load = result.load
        print(f"✅ Committed {load.entities} entities in {load.transactions} transactions, "
              f"{load.blocks} blocks ({load.elapsed:.1f} virtual s)")

    audit = audit_state(state)
    print(f"{'✅' if audit.ok else '❌'} Consistency audit: {len(audit.problems)} problem(s)")
    for entity_type, count in sorted(audit.counts.items()):
        print(f"   {entity_type:<14} {count:>10}")
    meta = SnapshotStore(snapshot_path(config)).save(
        state, config.seed, config.workload.warehouses, config.workload.scale_factor)
    print(f"💾 Snapshot: {snapshot_path(config)} ({meta.state_hash[:16]})")
    return 0 if audit.ok else 1


def load_state(config: Config) -> WorldState:
    """State for a run: the snapshot when given, otherwise a direct population."""
    if config.snapshot:
        state, meta = SnapshotStore(config.snapshot).load()
        if meta.seed != config.seed or meta.warehouses != config.workload.warehouses:
            logger.warning("Snapshot was loaded with seed %d / %d warehouse(s); run uses seed %d / %d",
                           meta.seed, meta.warehouses, config.seed, config.workload.warehouses)
        print(f"💾 Restored snapshot {config.snapshot} ({len(state)} entries)")
        return state
    plan = BenchmarkPlan.from_config(config, load=False)
    return populate_directly(WorldState(), prepare_round(plan, 0))


def command_run(config: Config, args) -> int:
    state = load_state(config)
    plan = BenchmarkPlan.from_config(config, load=False)
    print(f"\n🔍 Running {plan.rounds[0].driving_mode.value}-driven round...")
    result = BenchmarkManager(config).run(plan, state)
    round_result = result.rounds[0]
    reports = ReportGenerator(config.output_dir)
    reports.export_records(round_result.collector.to_frame())
    reports.write_summary([round_result.summary])
    save_config(config, Path(config.output_dir) / 'config.json')
    if config.keep_blocks:
        write_blocks(round_result.blocks, Path(config.output_dir) / 'blocks.jsonl')
    print_summary(round_result.summary)
    print(f"🔐 State hash: {round_result.state_hash}")
    return 0


def command_sweep(config: Config, args) -> int:
    grid = config.sweep_terminals
    print(f"\n🧪 Sweeping {len(grid)} configuration(s): {', '.join(str(g) for g in grid)}")
    runner = SweepRunner(config)
    base = load_state(config)
    result = runner.run(base, grid)
    reports = ReportGenerator(config.output_dir)
    records = result.records()
    reports.export_records(records)
    reports.write_summary(result.summaries, title="TPC-C ledger benchmark sweep")
    reports.write_rate_data(result.summaries)
    reports.write_precision_data(result.summaries)
    table = reports.write_error_profile(records)
    reports.plot_rate(result.summaries)
    reports.plot_precision(result.precision_by_terminals())
    reports.plot_error_profile(table)
    print("\n📊 ERROR PROFILE")
    print("-" * 40)
    for label, row in table.iterrows():
        print(f"{label:>8}: committed {row['committed']:.3f}  invalidated {row['invalidated']:.3f}  "
              f"timeouts {row['endorsement-timeout'] + row['commit-timeout']:.3f}")
    if config.clock is ClockMode.WALL:
        medians = ", ".join(f"{count}: {s.median:.6f}" for count, s in result.precision_summaries().items())
        trend = "tightens" if result.precision_tightens() else "does not tighten"
        print(f"\n🎯 Precision median per terminals/worker ({medians}) {trend}")
    return 0


def command_report(config: Config, args) -> int:
    records = load_records(args.records)
    reports = ReportGenerator(config.output_dir)
    summaries: List[RunSummary] = []
    for label, group in records.groupby('config', sort=False):
        duration = args.duration or float(group['finished'].max() or 0.0) or 1.0
        summaries.append(summarize(group, duration, label=str(label),
                                   terminals=int(group['terminal_id'].nunique())))
    reports.export_records(records)
    reports.write_summary(summaries)
    reports.write_rate_data(summaries)
    table = reports.write_error_profile(records)
    reports.plot_rate(summaries)
    reports.plot_error_profile(table)
    for summary in summaries:
        print_summary(summary)
    return 0


COMMANDS = {
    'load': command_load,
    'run': command_run,
    'sweep': command_sweep,
    'report': command_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="TPC-C benchmark on a simulated ledger")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help="JSON config file")
    common.add_argument('--warehouses', type=int)
    common.add_argument('--terminals-per-warehouse', type=int)
    common.add_argument('--workers', type=int)
    common.add_argument('--seed', type=int)
    common.add_argument('--clock', choices=[mode.value for mode in ClockMode])
    common.add_argument('--block-time-ms', type=int)
    common.add_argument('--out', help="Output directory")

    commands = parser.add_subparsers(dest='command', required=True)
    load = commands.add_parser('load', parents=[common], help="Populate and snapshot the world state")
    load.add_argument('--direct', action='store_true', help="Bypass the ledger pipeline")
    load.add_argument('--snapshot', help="Snapshot file (default: <out>/snapshot.sqlite)")

    run = commands.add_parser('run', parents=[common], help="Execute one benchmark round")
    run.add_argument('--snapshot', help="Start from this snapshot instead of a fresh population")
    run.add_argument('--terminals', type=int, help="Total terminal count")
    run.add_argument('--duration', type=float, help="Round duration in seconds")
    run.add_argument('--speedup', type=float, help="Wall-clock speedup factor")

    sweep = commands.add_parser('sweep', parents=[common], help="Run the terminal-count grid")
    sweep.add_argument('--snapshot')
    sweep.add_argument('--duration', type=float)
    sweep.add_argument('--grid', type=int, nargs='+', help="Terminal counts (default: 17-point grid)")

    report = commands.add_parser('report', parents=[common], help="Re-render outputs from a record dump")
    report.add_argument('--records', required=True)
    report.add_argument('--duration', type=float, help="Measurement window in seconds")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main function to run the benchmark CLI."""
    args = build_parser().parse_args(argv)
    setup_logging()
    print_banner()
    try:
        config = load_config(args.config, config_overrides(args))
        print_config(config)
        status = COMMANDS[args.command](config, args)
    except TpccLedgerError as exc:
        logger.error("%s", exc)
        print(f"❌ Error: {exc}", file=sys.stderr)
        return 1

    print("\n" + "=" * 60)
    print("✅ Done!" if status == 0 else "⚠️ Finished with problems")
    print("=" * 60)
    return status


if __name__ == "__main__":
    sys.exit(main())
