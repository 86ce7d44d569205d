"""
World-state snapshot store backed by SQLite through SQLAlchemy.
"""

import logging
from pathlib import Path
from typing import Optional, Tuple

from sqlalchemy import create_engine, delete, insert, select
from sqlalchemy.exc import DatabaseError
from sqlalchemy.orm import Session

from .exceptions import SnapshotNotFoundError
from .models import Base, SnapshotMeta, StateEntry
from .world_state import Version, WorldState

logger = logging.getLogger(__name__)

INSERT_CHUNK = 10_000


class SnapshotStore:
    """Saves and restores one world state per SQLite file."""

    def __init__(self, path):
        self.path = Path(path)

    def _engine(self):
        return create_engine(f"sqlite:///{self.path}", future=True)

    def save(self, state: WorldState, seed: int, warehouses: int, scale_factor: float = 1.0) -> SnapshotMeta:
        """
        Persist `state`, replacing any snapshot already in the file.

        Returns:
            SnapshotMeta: Metadata of the stored snapshot (detached)
        """
        self.path.parent.mkdir(parents=True, exist_ok=True)
        engine = self._engine()
        Base.metadata.create_all(engine)
        with Session(engine) as session, session.begin():
            session.execute(delete(StateEntry))
            session.execute(delete(SnapshotMeta))
            meta = SnapshotMeta(
                seed=seed,
                warehouses=warehouses,
                scale_factor=repr(float(scale_factor)),
                height=state.height,
                entry_count=len(state),
                state_hash=state.state_hash(),
            )
            session.add(meta)
            session.flush()
            chunk = []
            for key, (value, version) in state.items():
                chunk.append({
                    "snapshot_id": meta.id,
                    "key": key.encode("utf-8"),
                    "value": value,
                    "block_no": version.block_no,
                    "tx_index": version.tx_index,
                })
                if len(chunk) >= INSERT_CHUNK:
                    session.execute(insert(StateEntry), chunk)
                    chunk = []
            if chunk:
                session.execute(insert(StateEntry), chunk)
            session.expunge(meta)
        engine.dispose()
        logger.info("Saved snapshot of %d entries to %s", meta.entry_count, self.path)
        return meta

    def load(self) -> Tuple[WorldState, SnapshotMeta]:
        """
        Restore the stored world state.

        Raises:
            SnapshotNotFoundError: If the file or the snapshot in it is missing
        """
        if not self.path.exists():
            raise SnapshotNotFoundError(str(self.path))
        engine = self._engine()
        state = WorldState()
        try:
            with Session(engine) as session:
                meta: Optional[SnapshotMeta] = session.scalars(select(SnapshotMeta)).first()
                if meta is None:
                    raise SnapshotNotFoundError(str(self.path))
                rows = session.execute(
                    select(StateEntry.key, StateEntry.value, StateEntry.block_no, StateEntry.tx_index)
                    .where(StateEntry.snapshot_id == meta.id)
                    .order_by(StateEntry.key)
                )
                for key, value, block_no, tx_index in rows:
                    state.put(key.decode("utf-8"), value, Version(block_no, tx_index))
                session.expunge(meta)
        except DatabaseError as exc:
            raise SnapshotNotFoundError(str(self.path)) from exc
        finally:
            engine.dispose()
        state.height = meta.height
        if state.state_hash() != meta.state_hash:
            logger.warning("Snapshot %s hash mismatch after restore", self.path)
        logger.info("Restored %d entries from %s", len(state), self.path)
        return state, meta
