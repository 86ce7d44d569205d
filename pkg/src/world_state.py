"""
Versioned key-value world state.

Holds the committed value and version of every key, kept in lexicographic key
order per entity type so that partial-key range scans run in logarithmic time.
The state is mutated only by the committer.
"""

import bisect
import hashlib
from typing import Dict, Iterator, List, NamedTuple, Optional, Tuple

from .keys import type_of


class Version(NamedTuple):
    """Position of the transaction that last wrote a key."""
    block_no: int
    tx_index: int


class VersionedValue(NamedTuple):
    value: bytes
    version: Version


class WorldState:
    """Ordered map key -> VersionedValue plus the current block height."""

    def __init__(self):
        self._data: Dict[str, VersionedValue] = {}
        self._sorted: Dict[str, List[str]] = {}
        # Number of blocks committed so far, i.e. the next block number.
        self.height = 0

    def __len__(self) -> int:
        return len(self._data)

    def __contains__(self, key: str) -> bool:
        return key in self._data

    def get(self, key: str) -> Optional[VersionedValue]:
        return self._data.get(key)

    def version_of(self, key: str) -> Optional[Version]:
        entry = self._data.get(key)
        return entry.version if entry is not None else None

    def put(self, key: str, value: bytes, version: Version) -> None:
        if key not in self._data:
            keys = self._sorted.setdefault(type_of(key), [])
            if not keys or key > keys[-1]:
                keys.append(key)
            else:
                bisect.insort(keys, key)
        self._data[key] = VersionedValue(value, version)

    def delete(self, key: str) -> None:
        if self._data.pop(key, None) is None:
            return
        keys = self._sorted[type_of(key)]
        position = bisect.bisect_left(keys, key)
        del keys[position]

    def scan(self, start: str, end: str,
             reverse: bool = False) -> Iterator[Tuple[str, VersionedValue]]:
        """
        Iterate committed entries with start <= key < end.

        Both bounds must share an entity type. The iteration is lazy; the state
        must not be mutated while a scan is being consumed.

        Args:
            start: Inclusive lower bound
            end: Exclusive upper bound
            reverse: Iterate from the largest key down

        Returns:
            Iterator[Tuple[str, VersionedValue]]: Matching entries in key order
        """
        keys = self._sorted.get(type_of(start))
        if not keys:
            return
        low = bisect.bisect_left(keys, start)
        high = bisect.bisect_left(keys, end, lo=low)
        indexes = range(high - 1, low - 1, -1) if reverse else range(low, high)
        for index in indexes:
            key = keys[index]
            yield key, self._data[key]

    def keys_between(self, start: str, end: str) -> List[str]:
        """Keys in [start, end), ascending."""
        return [key for key, _ in self.scan(start, end)]

    def items(self) -> Iterator[Tuple[str, VersionedValue]]:
        """All entries, grouped by type name and ordered by key within a type."""
        for type_prefix in sorted(self._sorted):
            for key in self._sorted[type_prefix]:
                yield key, self._data[key]

    def count(self, type_prefix: str) -> int:
        return len(self._sorted.get(type_prefix, ()))

    def type_names(self) -> List[str]:
        return sorted(name for name, keys in self._sorted.items() if keys)

    def state_hash(self, include_versions: bool = False) -> str:
        """
        SHA-256 over all keys and values in key order.

        Versions are left out by default so that states reached through different
        block layouts compare equal when their contents are equal.
        """
        digest = hashlib.sha256()
        for key, entry in self.items():
            encoded_key = key.encode("utf-8")
            digest.update(len(encoded_key).to_bytes(4, "big"))
            digest.update(encoded_key)
            digest.update(len(entry.value).to_bytes(4, "big"))
            digest.update(entry.value)
            if include_versions:
                digest.update(entry.version.block_no.to_bytes(8, "big"))
                digest.update(entry.version.tx_index.to_bytes(4, "big"))
        return digest.hexdigest()

    def copy(self) -> "WorldState":
        clone = WorldState()
        clone._data = dict(self._data)
        clone._sorted = {name: list(keys) for name, keys in self._sorted.items()}
        clone.height = self.height
        return clone

    def __repr__(self) -> str:
        return f"WorldState(keys={len(self._data)}, height={self.height})"

