"""
Error hierarchy for the TPC-C ledger benchmark.

Every error raised on purpose by the library derives from TpccLedgerError so the
command-line entry point can turn it into a one-line diagnostic.
"""

from typing import Optional


class TpccLedgerError(Exception):
    """Base class for all benchmark errors."""


class KeyEncodingError(TpccLedgerError, ValueError):
    """A key component cannot be encoded (overflowing pad width, bad characters)."""


class RegistryError(TpccLedgerError):
    """Base class for registry (asset layer) failures."""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class AlreadyExistsError(RegistryError):
    """Create was called for a key that is already present."""


class NotFoundError(RegistryError):
    """Read was called for a key that is not present."""


class BusinessRollback(TpccLedgerError):
    """Application-level abort requested by a transaction profile."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class MarshalError(TpccLedgerError, ValueError):
    """String arguments at the contract boundary could not be converted."""


class UnknownFunctionError(MarshalError):
    """The contract has no function registered under the requested name."""


class HarnessFault(TpccLedgerError):
    """Internal inconsistency between terminals, multiplexer and workers."""


class RoundAbortedError(TpccLedgerError):
    """A benchmark round could not be completed."""

    def __init__(self, round_label: str, reason: str):
        super().__init__(f"Round '{round_label}' aborted: {reason}")
        self.round_label = round_label
        self.reason = reason


class ConfigError(TpccLedgerError, ValueError):
    """Invalid configuration; `key` names the offending setting."""

    def __init__(self, key: str, message: str):
        super().__init__(f"Invalid configuration key '{key}': {message}")
        self.key = key


class ReportError(TpccLedgerError):
    """Metrics could not be summarized or written."""

    def __init__(self, message: str, path: Optional[str] = None):
        if path:
            message = f"{message} ({path})"
        super().__init__(message)
        self.path = path


class SnapshotNotFoundError(TpccLedgerError):
    """The requested world-state snapshot does not exist."""

    def __init__(self, path: str):
        super().__init__(f"Snapshot not found: {path}")
        self.path = path
