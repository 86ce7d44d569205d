"""
Benchmark configuration.

Typed, immutable settings for the ledger, the workload and the run, built by
layering built-in defaults, a JSON config file, environment variables (a
`.env` file is honored) and command-line overrides. Every setting has a flat
config-file key; validation errors name the offending key.
"""

import json
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

from dotenv import load_dotenv

from .clock import ClockMode
from .exceptions import ConfigError
from .latency import LATENCY_PRESETS, LatencyModelSpec

logger = logging.getLogger(__name__)

TIMING_PRESET_NAMES = ("tpcc-standard", "measured")
# Accepted spellings of the preset names.
TIMING_PRESET_ALIASES = {"paper-calibrated": "measured"}
DRIVING_MODES = ("duration", "tx-count")


def canonical_timing_preset(name: str) -> str:
    return TIMING_PRESET_ALIASES.get(name, name)


def default_sweep_grid() -> Tuple[int, ...]:
    """Terminal counts 10..100 step 10 followed by 100..400 step 50 (17 points)."""
    return tuple(range(10, 101, 10)) + tuple(range(100, 401, 50))


@dataclass(frozen=True)
class LedgerConfig:
    """Ordering and peer settings (durations in seconds)."""

    block_time: float = 0.1
    max_tx: int = 10
    max_bytes: int = 524_288
    latency_preset: str = "calibrated"
    endorsement_latency: LatencyModelSpec = LATENCY_PRESETS["calibrated"][0]
    commit_latency: LatencyModelSpec = LATENCY_PRESETS["calibrated"][1]
    endorsement_timeout: float = 30.0
    commit_timeout: float = 60.0

    @classmethod
    def with_preset(cls, name: str, **overrides) -> "LedgerConfig":
        if name not in LATENCY_PRESETS:
            raise ConfigError("latency_preset", f"unknown preset '{name}'")
        endorsement, commit = LATENCY_PRESETS[name]
        return cls(latency_preset=name, endorsement_latency=endorsement,
                   commit_latency=commit, **overrides)


@dataclass(frozen=True)
class WorkloadConfig:
    """What the terminals do."""

    warehouses: int = 1
    terminals_per_warehouse: int = 10
    # Explicit terminal count; overrides warehouses * terminals_per_warehouse.
    terminals: Optional[int] = None
    timing_preset: str = "measured"
    # Multiplier on keying and think times (1.0 keeps the preset).
    timing_scale: float = 1.0
    retry_cap: int = 5
    retry_backoff: float = 0.0
    scale_factor: float = 1.0

    @property
    def total_terminals(self) -> int:
        if self.terminals is not None:
            return self.terminals
        return self.warehouses * self.terminals_per_warehouse


@dataclass(frozen=True)
class Config:
    """Complete run configuration."""

    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    ledger: LedgerConfig = field(default_factory=LedgerConfig)
    workers: int = 1
    clock: ClockMode = ClockMode.VIRTUAL
    speedup: float = 1.0
    duration: float = 600.0
    driving_mode: str = "duration"
    tx_count: int = 0
    seed: int = 42
    output_dir: str = "output"
    load_batch_size: int = 50
    load_window: int = 10
    load_retries: int = 5
    multiprocess: bool = False
    keep_blocks: bool = False
    sweep_terminals: Tuple[int, ...] = field(default_factory=default_sweep_grid)
    # `load` populates the state directly instead of through the ledger.
    direct_load: bool = False
    # Snapshot file written by `load` and read by `run` and `sweep`.
    snapshot: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        """Flat config-file representation."""
        record: Dict[str, Any] = {}
        for key, (section, name, _, _) in FILE_KEYS.items():
            target = self if section is None else getattr(self, section)
            value = getattr(target, name)
            if key == "block_time_ms":
                value = int(round(value * 1000))
            elif isinstance(value, LatencyModelSpec):
                value = value.to_dict()
            elif isinstance(value, ClockMode):
                value = value.value
            elif isinstance(value, tuple):
                value = list(value)
            record[key] = value
        return record

    def with_terminals(self, terminals: int) -> "Config":
        return replace(self, workload=replace(self.workload, terminals=terminals))


def _non_negative_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool) and value >= 0


def _positive_int(value) -> bool:
    return _non_negative_int(value) and value > 0


def _non_negative_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and value >= 0


def _positive_number(value) -> bool:
    return _non_negative_number(value) and value > 0


def _optional_count(value) -> bool:
    return value is None or _non_negative_int(value)


def _scale(value) -> bool:
    return _non_negative_number(value) and value >= 1


def _grid(value) -> bool:
    return isinstance(value, (list, tuple)) and all(_non_negative_int(v) for v in value)


def _one_of(options) -> Callable[[Any], bool]:
    return lambda value: value in options


def _latency(value) -> bool:
    return isinstance(value, dict)


# file key -> (section, field, converter, validator); section None is the top level.
FILE_KEYS: Dict[str, Tuple[Optional[str], str, Callable, Callable]] = {
    "warehouses": ("workload", "warehouses", int, _non_negative_int),
    "terminals_per_warehouse": ("workload", "terminals_per_warehouse", int, _non_negative_int),
    "terminals": ("workload", "terminals", lambda v: v, _optional_count),
    "timing_preset": ("workload", "timing_preset", canonical_timing_preset,
                      _one_of(TIMING_PRESET_NAMES + tuple(TIMING_PRESET_ALIASES))),
    "timing_scale": ("workload", "timing_scale", float, _positive_number),
    "retry_cap": ("workload", "retry_cap", int, _non_negative_int),
    "retry_backoff": ("workload", "retry_backoff", float, _non_negative_number),
    "scale_factor": ("workload", "scale_factor", float, _scale),
    "block_time_ms": ("ledger", "block_time", lambda v: v / 1000.0, _positive_number),
    "max_tx": ("ledger", "max_tx", int, _positive_int),
    "max_bytes": ("ledger", "max_bytes", int, _positive_int),
    "latency_preset": ("ledger", "latency_preset", str, _one_of(tuple(LATENCY_PRESETS))),
    "endorsement_latency": ("ledger", "endorsement_latency", LatencyModelSpec.from_dict, _latency),
    "commit_latency": ("ledger", "commit_latency", LatencyModelSpec.from_dict, _latency),
    "endorsement_timeout": ("ledger", "endorsement_timeout", float, _positive_number),
    "commit_timeout": ("ledger", "commit_timeout", float, _positive_number),
    "workers": (None, "workers", int, _positive_int),
    "clock": (None, "clock", ClockMode, _one_of(tuple(mode.value for mode in ClockMode))),
    "speedup": (None, "speedup", float, _positive_number),
    "duration": (None, "duration", float, _non_negative_number),
    "driving_mode": (None, "driving_mode", str, _one_of(DRIVING_MODES)),
    "tx_count": (None, "tx_count", int, _non_negative_int),
    "seed": (None, "seed", int, _non_negative_int),
    "output_dir": (None, "output_dir", str, lambda v: isinstance(v, str) and bool(v)),
    "load_batch_size": (None, "load_batch_size", int, _positive_int),
    "load_window": (None, "load_window", int, _positive_int),
    "load_retries": (None, "load_retries", int, _non_negative_int),
    "multiprocess": (None, "multiprocess", bool, lambda v: isinstance(v, bool)),
    "keep_blocks": (None, "keep_blocks", bool, lambda v: isinstance(v, bool)),
    "sweep_terminals": (None, "sweep_terminals", tuple, _grid),
    "direct_load": (None, "direct_load", bool, lambda v: isinstance(v, bool)),
    "snapshot": (None, "snapshot", lambda v: v, lambda v: v is None or (isinstance(v, str) and bool(v))),
}

ENVIRONMENT_KEYS = {
    "TPCC_SEED": ("seed", int),
    "TPCC_WORKERS": ("workers", int),
    "TPCC_CLOCK": ("clock", str),
    "TPCC_OUTPUT_DIR": ("output_dir", str),
}


def build_config(values: Mapping[str, Any], base: Optional[Config] = None) -> Config:
    """
    Apply flat key/value settings on top of a base configuration.

    Raises:
        ConfigError: For unknown keys or invalid values
    """
    base = base or Config()
    sections: Dict[Optional[str], Dict[str, Any]] = {None: {}, "workload": {}, "ledger": {}}
    preset = values.get("latency_preset")
    for key, value in values.items():
        if key not in FILE_KEYS:
            raise ConfigError(key, "unknown setting")
        section, name, convert, valid = FILE_KEYS[key]
        if not valid(value):
            raise ConfigError(key, f"invalid value {value!r}")
        try:
            sections[section][name] = convert(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(key, str(exc)) from exc

    ledger_fields = sections["ledger"]
    if preset is not None:
        endorsement, commit = LATENCY_PRESETS[preset]
        ledger_fields.setdefault("endorsement_latency", endorsement)
        ledger_fields.setdefault("commit_latency", commit)
    ledger = replace(base.ledger, **ledger_fields)
    workload = replace(base.workload, **sections["workload"])
    return replace(base, workload=workload, ledger=ledger, **sections[None])


def read_config_file(path) -> Dict[str, Any]:
    """
    Read a JSON config file into a flat dict.

    Raises:
        ConfigError: If the file is missing or not a JSON object
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError("config", f"file not found: {path}")
    try:
        with path.open("r", encoding="utf-8") as handle:
            data = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config", f"{path} must contain a JSON object")
    return data


def environment_overrides(environ: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
    """Settings taken from TPCC_* environment variables."""
    if environ is None:
        load_dotenv()
        environ = os.environ
    overrides: Dict[str, Any] = {}
    for variable, (key, convert) in ENVIRONMENT_KEYS.items():
        raw = environ.get(variable)
        if raw is None or raw == "":
            continue
        try:
            overrides[key] = convert(raw)
        except ValueError as exc:
            raise ConfigError(key, f"{variable}={raw!r} is not valid") from exc
    return overrides


def load_config(path=None, overrides: Optional[Mapping[str, Any]] = None,
                environ: Optional[Mapping[str, str]] = None) -> Config:
    """
    Build the effective configuration.

    Precedence: defaults < config file < environment < overrides (CLI flags).
    A config file must state `warehouses` unless the overrides provide it.

    Args:
        path: Optional JSON config file
        overrides: Flat settings from the command line (None values are ignored)
        environ: Environment mapping (os.environ plus .env when omitted)

    Returns:
        Config: Validated configuration
    """
    overrides = {key: value for key, value in (overrides or {}).items() if value is not None}
    values: Dict[str, Any] = {}
    if path is not None:
        values.update(read_config_file(path))
        if "warehouses" not in values and "warehouses" not in overrides:
            raise ConfigError("warehouses", f"missing from {path}")
    values.update(environment_overrides(environ))
    values.update(overrides)
    config = build_config(values)
    logger.debug("Effective configuration: %s", config.to_dict())
    return config


def save_config(config: Config, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        json.dump(config.to_dict(), handle, indent=2, sort_keys=True)
    return path
