"""
Database Models for world-state snapshots

SQLAlchemy models persisting a loaded world state so that `run` can start
from the state `load` produced.
"""

from datetime import datetime

from sqlalchemy import DateTime, ForeignKey, Integer, LargeBinary, String
from sqlalchemy.orm import DeclarativeBase, Mapped, mapped_column, relationship


class Base(DeclarativeBase):
    pass


class SnapshotMeta(Base):
    """One saved world state and how it was produced."""

    __tablename__ = 'snapshots'

    id: Mapped[int] = mapped_column(Integer, primary_key=True)
    seed: Mapped[int] = mapped_column(Integer, nullable=False)
    warehouses: Mapped[int] = mapped_column(Integer, nullable=False)
    scale_factor: Mapped[str] = mapped_column(String(32), nullable=False)
    height: Mapped[int] = mapped_column(Integer, nullable=False, default=0)
    entry_count: Mapped[int] = mapped_column(Integer, nullable=False, default=0)
    state_hash: Mapped[str] = mapped_column(String(64), nullable=False)
    created_at: Mapped[datetime] = mapped_column(DateTime, default=datetime.utcnow)

    entries = relationship('StateEntry', back_populates='snapshot', cascade='all, delete-orphan')

    def to_dict(self):
        return {
            'id': self.id,
            'seed': self.seed,
            'warehouses': self.warehouses,
            'scale_factor': float(self.scale_factor),
            'height': self.height,
            'entry_count': self.entry_count,
            'state_hash': self.state_hash,
            'created_at': self.created_at.isoformat() if self.created_at else None,
        }

    def __repr__(self):
        return f'<SnapshotMeta {self.id} W={self.warehouses} {self.state_hash[:12]}>'


class StateEntry(Base):
    """A versioned key/value pair of a snapshot."""

    __tablename__ = 'state_entries'

    snapshot_id: Mapped[int] = mapped_column(ForeignKey('snapshots.id'), primary_key=True)
    # Keys contain NUL separators, so they are stored as UTF-8 bytes.
    key: Mapped[bytes] = mapped_column(LargeBinary, primary_key=True)
    value: Mapped[bytes] = mapped_column(LargeBinary, nullable=False)
    block_no: Mapped[int] = mapped_column(Integer, nullable=False)
    tx_index: Mapped[int] = mapped_column(Integer, nullable=False)

    snapshot = relationship('SnapshotMeta', back_populates='entries')

    def __repr__(self):
        return f'<StateEntry {self.key!r} v=({self.block_no},{self.tx_index})>'
