"""
Ledger access layer used during endorsement.

A LedgerAccess wraps the committed world state for one executing transaction.
It serves reads from the state (overlaid with the transaction's own writes),
buffers writes, and records the read-write set together with the access
statistics that are reported alongside every transaction.
"""

import heapq
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

from .keys import SEPARATOR
from .world_state import Version, WorldState


@dataclass
class RangeRead:
    """A range query and the committed keys it observed."""

    start: str
    end: str
    reverse: bool = False
    observed: List[Tuple[str, Version]] = field(default_factory=list)
    # Last key consumed by the caller; bounds the extent checked for phantoms.
    last_key: Optional[str] = None
    exhausted: bool = False

    def extent(self) -> Optional[Tuple[str, str]]:
        """Half-open key interval actually covered by the query, None if nothing was consumed."""
        if self.exhausted:
            return self.start, self.end
        if self.last_key is None:
            return None
        if self.reverse:
            return self.last_key, self.end
        return self.start, self.last_key + SEPARATOR


@dataclass
class AccessStats:
    """Data access statistics of one transaction execution."""

    read_count: int = 0
    write_count: int = 0
    range_read_count: int = 0
    bytes_read: int = 0
    bytes_written: int = 0

    def as_dict(self) -> Dict[str, int]:
        return {
            "read_count": self.read_count,
            "write_count": self.write_count,
            "range_read_count": self.range_read_count,
            "bytes_read": self.bytes_read,
            "bytes_written": self.bytes_written,
        }


@dataclass
class ReadWriteSet:
    """
    Result of a speculative execution.

    reads maps each point-read key to the version observed (None when absent);
    writes maps each written key to its new value (None means delete).
    """

    reads: Dict[str, Optional[Version]] = field(default_factory=dict)
    writes: Dict[str, Optional[bytes]] = field(default_factory=dict)
    range_reads: List[RangeRead] = field(default_factory=list)
    bytes_read: int = 0

    @property
    def is_read_only(self) -> bool:
        return not self.writes

    def stats(self) -> AccessStats:
        return AccessStats(
            read_count=len(self.reads) + sum(len(r.observed) for r in self.range_reads),
            write_count=len(self.writes),
            range_read_count=len(self.range_reads),
            bytes_read=self.bytes_read,
            bytes_written=sum(len(value) for value in self.writes.values() if value is not None),
        )

    def byte_size(self) -> int:
        """Approximate size of the set as shipped to the orderer."""
        size = sum(len(key) + 16 for key in self.reads)
        size += sum(len(key) + (len(value) if value else 0) for key, value in self.writes.items())
        for range_read in self.range_reads:
            size += len(range_read.start) + len(range_read.end)
            size += sum(len(key) + 16 for key, _ in range_read.observed)
        return size


class LedgerAccess:
    """Endorsement context: all state access of one transaction goes through here."""

    def __init__(self, state: WorldState):
        self._state = state
        self._rwset = ReadWriteSet()

    @property
    def read_write_set(self) -> ReadWriteSet:
        return self._rwset

    def stats(self) -> AccessStats:
        return self._rwset.stats()

    def get(self, key: str) -> Optional[bytes]:
        """
        Read a key, seeing this transaction's own earlier writes.

        The first read served from committed state records the observed version;
        reads of keys this transaction already wrote are not recorded.
        """
        writes = self._rwset.writes
        if key in writes:
            return writes[key]
        entry = self._state.get(key)
        if key not in self._rwset.reads:
            self._rwset.reads[key] = entry.version if entry is not None else None
            if entry is not None:
                self._rwset.bytes_read += len(entry.value)
        return entry.value if entry is not None else None

    def put(self, key: str, value: bytes) -> None:
        self._rwset.writes[key] = value

    def delete(self, key: str) -> None:
        self._rwset.writes[key] = None

    def scan(self, start: str, end: str, reverse: bool = False) -> Iterator[Tuple[str, bytes]]:
        """
        Range query over [start, end) merged with this transaction's own writes.

        The query is recorded immediately; the committed keys it observes are
        appended as the caller consumes the iterator, so stopping early records
        exactly the consumed prefix.
        """
        range_read = RangeRead(start=start, end=end, reverse=reverse)
        self._rwset.range_reads.append(range_read)
        return self._consume(range_read)

    def _consume(self, range_read: RangeRead) -> Iterator[Tuple[str, bytes]]:
        start, end, reverse = range_read.start, range_read.end, range_read.reverse
        writes = self._rwset.writes
        own = sorted((key for key in writes if start <= key < end and key not in self._state),
                     reverse=reverse)
        committed = ((key, entry) for key, entry in self._state.scan(start, end, reverse))
        pending = ((key, None) for key in own)
        for key, entry in heapq.merge(committed, pending, key=lambda item: item[0], reverse=reverse):
            range_read.last_key = key
            if entry is not None:
                range_read.observed.append((key, entry.version))
                self._rwset.bytes_read += len(entry.value)
                value = writes[key] if key in writes else entry.value
            else:
                value = writes[key]
            if value is None:
                continue
            yield key, value
        range_read.exhausted = True

    def discard_writes(self) -> None:
        """Drop buffered writes (business rollback); the reads stay recorded."""
        self._rwset.writes.clear()
