"""
Execute-order-validate ledger simulation.

A single peer endorses proposals by executing the contract against the current
committed world state, an ordering service batches endorsed transactions into
blocks (by count, size or age), and a committer validates each block against
the read versions recorded at endorsement before applying the valid writes.
All stages run as processes of one simpy environment, so the whole pipeline
is deterministic under the virtual clock.
"""

import bisect
import enum
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import simpy

from .clock import to_seconds, to_ticks
from .config import LedgerConfig
from .contract import Contract, ProfileRequest, ProfileResponse
from .exceptions import ReportError
from .latency import LatencyModel
from .ledger_access import AccessStats, LedgerAccess, ReadWriteSet
from .random_gen import RandomSource
from .world_state import Version, WorldState

logger = logging.getLogger(__name__)


class CutReason(str, enum.Enum):
    TIMEOUT = "timeout"
    MAX_COUNT = "max-count"
    MAX_BYTES = "max-bytes"


class ValidationCode(str, enum.Enum):
    VALID = "valid"
    MVCC_CONFLICT = "mvcc-conflict"
    COMMIT_TIMEOUT = "commit-timeout"


class TxStatus(str, enum.Enum):
    """Terminal status of one transaction attempt."""
    COMMITTED = "committed"
    BUSINESS_ROLLBACK = "business-rollback"
    ENDORSEMENT_ERROR = "endorsement-error"
    MVCC_CONFLICT = "mvcc-conflict"
    ENDORSEMENT_TIMEOUT = "endorsement-timeout"
    COMMIT_TIMEOUT = "commit-timeout"
    ABANDONED = "abandoned"


@dataclass(frozen=True)
class Proposal:
    request: ProfileRequest
    submitter_id: int
    created: int

    @property
    def tx_id(self) -> str:
        return self.request.tx_id


@dataclass
class Endorsement:
    """Result of executing a proposal on the peer."""

    tx_id: str
    response: ProfileResponse
    rwset: ReadWriteSet
    stats: AccessStats
    snapshot_height: int
    started: int
    latency: int


@dataclass
class EndorsedTransaction:
    """A transaction as the orderer sees it."""

    tx_id: str
    submitter_id: int
    request: ProfileRequest
    rwset: ReadWriteSet
    arrival: int
    size: int

    @property
    def order_key(self) -> Tuple[int, int, str]:
        return (self.arrival, self.submitter_id, self.tx_id)


@dataclass
class TxOutcome:
    """Validation result of one transaction in a block."""

    tx_id: str
    block_no: int
    tx_index: int
    code: ValidationCode
    # Whether the writes were applied; a late transaction may still be valid.
    valid: bool
    ordered_at: int
    committed_at: int


@dataclass
class Block:
    block_no: int
    cut_reason: CutReason
    transactions: List[EndorsedTransaction]
    cut_time: int
    outcomes: List[TxOutcome] = field(default_factory=list)

    @property
    def byte_size(self) -> int:
        return sum(tx.size for tx in self.transactions)

    def to_record(self) -> Dict:
        return {
            "block_no": self.block_no,
            "cut_reason": self.cut_reason.value,
            "cut_time": to_seconds(self.cut_time),
            "bytes": self.byte_size,
            "transactions": [
                {
                    "tx_id": tx.tx_id,
                    "function": tx.request.function,
                    "submitter_id": tx.submitter_id,
                    "arrival": to_seconds(tx.arrival),
                    "reads": len(tx.rwset.reads),
                    "range_reads": len(tx.rwset.range_reads),
                    "writes": len(tx.rwset.writes),
                    "code": outcome.code.value if outcome else None,
                    "valid": outcome.valid if outcome else None,
                }
                for tx, outcome in zip(self.transactions, self.outcomes or [None] * len(self.transactions))
            ],
        }


@dataclass(frozen=True)
class LedgerEvent:
    """One lifecycle transition, streamed to subscribers."""

    kind: str
    tx_id: str
    time: int
    block_no: Optional[int] = None
    detail: Optional[str] = None


@dataclass
class AttemptResult:
    """Everything the client learns about one transaction attempt."""

    tx_id: str
    status: TxStatus
    submitted: int
    finished: int
    endorsed: Optional[int] = None
    ordered: Optional[int] = None
    block_no: Optional[int] = None
    tx_index: Optional[int] = None
    stats: AccessStats = field(default_factory=AccessStats)
    response: Optional[ProfileResponse] = None


class Orderer:
    """
    Ordering service: keeps pending transactions in arrival order and cuts blocks.

    Arrival ties are broken by submitter id, then transaction id.
    """

    def __init__(self, max_tx: int, max_bytes: int, block_time: int, first_block_no: int = 0):
        if max_tx < 1:
            raise ValueError(f"max_tx must be >= 1, got {max_tx}")
        if block_time <= 0:
            raise ValueError(f"block_time must be positive, got {block_time}")
        self.max_tx = max_tx
        self.max_bytes = max_bytes
        self.block_time = block_time
        self.next_block_no = first_block_no
        self._pending: List[EndorsedTransaction] = []
        self._keys: List[Tuple[int, int, str]] = []
        self._pending_bytes = 0

    def __len__(self) -> int:
        return len(self._pending)

    @property
    def pending_bytes(self) -> int:
        return self._pending_bytes

    @property
    def oldest_arrival(self) -> Optional[int]:
        return self._pending[0].arrival if self._pending else None

    def enqueue(self, tx: EndorsedTransaction) -> None:
        position = bisect.bisect_right(self._keys, tx.order_key)
        self._keys.insert(position, tx.order_key)
        self._pending.insert(position, tx)
        self._pending_bytes += tx.size

    def cut_block(self, now: int) -> Optional[Block]:
        """
        Cut a block if a criterion is met.

        Returns:
            Optional[Block]: The block, or None when nothing is due
        """
        if not self._pending:
            return None
        if len(self._pending) >= self.max_tx:
            count, reason = self.max_tx, CutReason.MAX_COUNT
        elif self._pending_bytes >= self.max_bytes:
            count, size = 0, 0
            for tx in self._pending:
                if count and size + tx.size > self.max_bytes:
                    break
                count += 1
                size += tx.size
            reason = CutReason.MAX_BYTES
        elif now - self._pending[0].arrival >= self.block_time:
            count, reason = len(self._pending), CutReason.TIMEOUT
        else:
            return None
        batch = self._pending[:count]
        del self._pending[:count]
        del self._keys[:count]
        self._pending_bytes -= sum(tx.size for tx in batch)
        block = Block(self.next_block_no, reason, batch, now)
        self.next_block_no += 1
        return block


def apply_writes(state: WorldState, rwset: ReadWriteSet, version: Version) -> None:
    for key, value in rwset.writes.items():
        if value is None:
            state.delete(key)
        else:
            state.put(key, value, version)


def is_valid(state: WorldState, rwset: ReadWriteSet) -> bool:
    """Check recorded read versions and range extents against the current state."""
    for key, version in rwset.reads.items():
        if state.version_of(key) != version:
            return False
    for range_read in rwset.range_reads:
        extent = range_read.extent()
        if extent is None:
            continue
        low, high = extent
        current = [(key, entry.version) for key, entry in state.scan(low, high, range_read.reverse)]
        if current != range_read.observed:
            return False
    return True


def validate_and_commit(state: WorldState, block: Block, now: int,
                        commit_timeout: Optional[int] = None) -> List[TxOutcome]:
    """
    Validate a block transaction by transaction and apply the valid writes.

    Each transaction sees the effects of the valid transactions before it in the
    same block. A transaction whose client deadline (arrival + commit_timeout)
    passed before `now` is reported as commit-timeout, but its writes are still
    applied when it is valid.

    Args:
        state: World state, mutated in place
        block: Block to apply; must be the next block number
        now: Commit time in ticks
        commit_timeout: Client commit deadline in ticks, None for no deadline

    Returns:
        List[TxOutcome]: One outcome per transaction, in block order
    """
    if block.block_no != state.height:
        raise ValueError(f"Block {block.block_no} applied out of order (height {state.height})")
    outcomes = []
    for index, tx in enumerate(block.transactions):
        valid = is_valid(state, tx.rwset)
        if valid:
            apply_writes(state, tx.rwset, Version(block.block_no, index))
        code = ValidationCode.VALID if valid else ValidationCode.MVCC_CONFLICT
        if commit_timeout is not None and now > tx.arrival + commit_timeout:
            code = ValidationCode.COMMIT_TIMEOUT
        outcomes.append(TxOutcome(tx.tx_id, block.block_no, index, code, valid, block.cut_time, now))
    state.height = block.block_no + 1
    block.outcomes = outcomes
    return outcomes


class Peer:
    """Endorsing and committing peer."""

    def __init__(self, env: simpy.Environment, state: WorldState, contract: Contract,
                 endorsement_model: LatencyModel):
        self.env = env
        self.state = state
        self.contract = contract
        self.endorsement_model = endorsement_model
        self.active = 0

    def execute(self, proposal: Proposal) -> Tuple[ProfileResponse, ReadWriteSet]:
        """Run the proposal against the current committed state without persisting anything."""
        access = LedgerAccess(self.state)
        response = self.contract.invoke(proposal.request, access)
        return response, access.read_write_set

    def endorse(self, proposal: Proposal) -> Endorsement:
        """
        Execute a proposal now and occupy the peer for the drawn service time.

        The execution sees the snapshot at the current instant; the returned
        latency says when the endorsement reaches the client.
        """
        response, rwset = self.execute(proposal)
        self.active += 1
        latency = self.endorsement_model.draw(active=self.active)
        self.env.process(self._release(latency))
        return Endorsement(
            tx_id=proposal.tx_id,
            response=response,
            rwset=rwset,
            stats=rwset.stats(),
            snapshot_height=self.state.height,
            started=self.env.now,
            latency=latency,
        )

    def _release(self, latency: int):
        yield self.env.timeout(latency)
        self.active -= 1


class LedgerNetwork:
    """Single peer, single orderer network sharing one world state."""

    def __init__(self, env: simpy.Environment, state: WorldState, config: LedgerConfig,
                 contract: Optional[Contract] = None, seed: int = 0, keep_blocks: bool = False):
        self.env = env
        self.state = state
        self.config = config
        rng = RandomSource([seed, 0x1ED6E7])
        self.peer = Peer(env, state, contract or Contract(),
                         LatencyModel(config.endorsement_latency, rng))
        self.commit_model = LatencyModel(config.commit_latency, RandomSource([seed, 0xC0111]))
        self.orderer = Orderer(config.max_tx, config.max_bytes, to_ticks(config.block_time),
                               first_block_no=state.height)
        self.endorsement_timeout = to_ticks(config.endorsement_timeout)
        self.commit_timeout = to_ticks(config.commit_timeout)
        self.keep_blocks = keep_blocks
        self.blocks: List[Block] = []
        self.closed = False
        self.rejected: List[str] = []
        self.submitted = 0
        self.validated = 0
        self._waiters: Dict[str, simpy.Event] = {}
        self._listeners: List[Callable[[LedgerEvent], None]] = []
        self._commit_queue = simpy.Store(env)
        self._committing = False
        self._timer_for: Optional[int] = None
        env.process(self._committer())

    def subscribe(self, listener: Callable[[LedgerEvent], None]) -> None:
        self._listeners.append(listener)

    def emit(self, kind: str, tx_id: str, block_no: Optional[int] = None,
             detail: Optional[str] = None) -> None:
        if not self._listeners:
            return
        event = LedgerEvent(kind, tx_id, self.env.now, block_no, detail)
        for listener in self._listeners:
            listener(event)

    @property
    def idle(self) -> bool:
        """True when nothing is pending at the orderer or the committer."""
        return not self._waiters and not len(self.orderer) and not self._commit_queue.items \
            and not self._committing

    def close(self) -> None:
        """Stop accepting submissions; transactions already submitted still complete."""
        self.closed = True

    def submit(self, tx: EndorsedTransaction) -> simpy.Event:
        """
        Hand an endorsed transaction to the orderer.

        Returns:
            simpy.Event: Succeeds with the TxOutcome once the block is committed,
            or with None when the network is closed
        """
        done = self.env.event()
        if self.closed:
            logger.warning("Submission of %s after close ignored", tx.tx_id)
            self.rejected.append(tx.tx_id)
            done.succeed(None)
            return done
        self._waiters[tx.tx_id] = done
        self.submitted += 1
        self.orderer.enqueue(tx)
        self.emit("submitted", tx.tx_id)
        self.env.process(self._check_cut())
        if self.orderer.oldest_arrival is not None and self._timer_for != self.orderer.oldest_arrival:
            self._arm_timer()
        return done

    def _arm_timer(self) -> None:
        oldest = self.orderer.oldest_arrival
        self._timer_for = oldest
        delay = max(0, oldest + self.orderer.block_time - self.env.now)
        self.env.process(self._timer(delay))

    def _timer(self, delay: int):
        yield self.env.timeout(delay)
        self._cut_due()

    def _check_cut(self):
        # Let every submission of this instant arrive before cutting.
        yield self.env.timeout(0)
        self._cut_due()

    def _cut_due(self) -> None:
        while True:
            block = self.orderer.cut_block(self.env.now)
            if block is None:
                break
            logger.debug("Cut block %d (%s, %d tx)", block.block_no, block.cut_reason.value,
                         len(block.transactions))
            for tx in block.transactions:
                self.emit("ordered", tx.tx_id, block.block_no)
            self._commit_queue.put(block)
        if self.orderer.oldest_arrival is not None and self._timer_for != self.orderer.oldest_arrival:
            self._arm_timer()

    def _committer(self):
        while True:
            block = yield self._commit_queue.get()
            self._committing = True
            duration = self.commit_model.draw(active=self.peer.active, tx_count=len(block.transactions))
            if duration:
                yield self.env.timeout(duration)
            outcomes = validate_and_commit(self.state, block, self.env.now, self.commit_timeout)
            self._committing = False
            self.validated += len(outcomes)
            if self.keep_blocks:
                self.blocks.append(block)
            logger.debug("Committed block %d: %d/%d valid", block.block_no,
                         sum(1 for outcome in outcomes if outcome.valid), len(outcomes))
            for outcome in outcomes:
                self.emit("validated", outcome.tx_id, outcome.block_no, outcome.code.value)
                waiter = self._waiters.pop(outcome.tx_id, None)
                if waiter is not None:
                    waiter.succeed(outcome)

    def dump_blocks(self, path) -> Path:
        return write_blocks(self.blocks, path)


def write_blocks(blocks: Iterable[Block], path) -> Path:
    """
    Write blocks as newline-delimited JSON records.

    Raises:
        ReportError: If the file cannot be written
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as handle:
            for block in blocks:
                handle.write(json.dumps(block.to_record(), separators=(",", ":")) + "\n")
    except OSError as exc:
        raise ReportError(f"Cannot write block dump: {exc}", str(path)) from exc
    return path


class LedgerClient:
    """Client side of the pipeline: endorse, submit, await the commit notification."""

    def __init__(self, network: LedgerNetwork):
        self.network = network
        self.env = network.env

    def execute(self, request: ProfileRequest, submitter_id: int, created: Optional[int] = None):
        """
        Run one attempt through the pipeline (a simpy process generator).

        Returns:
            AttemptResult: Final status and timestamps of the attempt
        """
        network = self.network
        env = self.env
        submitted = env.now
        proposal = Proposal(request, submitter_id, submitted if created is None else created)
        endorsement = network.peer.endorse(proposal)
        if endorsement.latency > network.endorsement_timeout:
            yield env.timeout(network.endorsement_timeout)
            network.emit("endorsement-timeout", request.tx_id)
            return AttemptResult(request.tx_id, TxStatus.ENDORSEMENT_TIMEOUT, submitted, env.now,
                                 stats=endorsement.stats, response=endorsement.response)
        if endorsement.latency:
            yield env.timeout(endorsement.latency)
        endorsed = env.now
        network.emit("endorsed", request.tx_id)
        if endorsement.response.error is not None or endorsement.response.rollback:
            status = TxStatus.ENDORSEMENT_ERROR if endorsement.response.error is not None \
                else TxStatus.BUSINESS_ROLLBACK
            return AttemptResult(request.tx_id, status, submitted, endorsed,
                                 endorsed=endorsed, stats=endorsement.stats,
                                 response=endorsement.response)

        tx = EndorsedTransaction(
            tx_id=request.tx_id,
            submitter_id=submitter_id,
            request=request,
            rwset=endorsement.rwset,
            arrival=endorsed,
            size=endorsement.rwset.byte_size(),
        )
        notification = network.submit(tx)
        deadline = env.timeout(network.commit_timeout)
        fired = yield notification | deadline
        outcome: Optional[TxOutcome] = fired[notification] if notification in fired else None
        if notification in fired and outcome is None:
            # Network closed before the submission arrived; never ordered.
            status = TxStatus.ABANDONED
        elif outcome is None or outcome.code is ValidationCode.COMMIT_TIMEOUT:
            status = TxStatus.COMMIT_TIMEOUT
        elif outcome.code is ValidationCode.VALID:
            status = TxStatus.COMMITTED
        else:
            status = TxStatus.MVCC_CONFLICT
        result = AttemptResult(request.tx_id, status, submitted, env.now, endorsed=endorsed,
                               stats=endorsement.stats, response=endorsement.response)
        if outcome is not None:
            result.ordered = outcome.ordered_at
            result.block_no = outcome.block_no
            result.tx_index = outcome.tx_index
        return result
