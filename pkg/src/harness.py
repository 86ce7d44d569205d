"""
Benchmark harness.

A manager runs a plan round by round. Before each round it prepares the shared
state (seeds, NURand constants, terminal assignment) once and hands it to the
workers, which confirm it by digest. The load round streams the initial
population through the ledger as batched create transactions and ends on a
completion signal; execution rounds drive the emulated terminals for a
duration or a transaction count.
"""

import enum
import hashlib
import itertools
import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, Generator, Iterable, List, Optional, Tuple

import numpy as np
import simpy

from .clock import SimulationClock, make_clock, to_seconds, to_ticks
from .config import Config
from .contract import ProfileRequest
from .entities import Entity, EntityType
from .exceptions import HarnessFault, RoundAbortedError, TpccLedgerError
from .inputs import LoadArgs
from .keys import DESCRIPTORS
from .ledger import AttemptResult, Block, LedgerClient, LedgerNetwork, TxStatus
from .ledger_access import LedgerAccess
from .messages import LocalChannel, Message, MessageType
from .metrics import MetricsCollector, MetricsRecord, RunSummary, summarize
from .multiplexer import Multiplexer
from .population import ScaleParameters, generate_initial_population
from .random_gen import NURandConstants, RandomSource
from .registry import TpccRegistries
from .terminal import Dispatched, Response, Terminal, TerminalRequest, TimingConstraints, assign_home
from .world_state import Version, WorldState

logger = logging.getLogger(__name__)

# Uniform draws buffered per terminal generator.
TERMINAL_RANDOM_BLOCK = 256
LOAD_SUBMITTER_ID = 0


class DrivingMode(str, enum.Enum):
    DURATION = "duration"
    TX_COUNT = "tx-count"
    COMPLETION_SIGNAL = "completion-signal"


@dataclass(frozen=True)
class RoundSpec:
    """One round of a plan."""

    label: str
    worker_count: int
    driving_mode: DrivingMode
    duration: float = 0.0
    tx_count: int = 0

    @property
    def is_load(self) -> bool:
        return self.driving_mode is DrivingMode.COMPLETION_SIGNAL


@dataclass(frozen=True)
class BenchmarkPlan:
    """Ordered rounds plus the configuration shared by all of them."""

    config: Config
    rounds: Tuple[RoundSpec, ...]

    def __post_init__(self):
        for index, spec in enumerate(self.rounds):
            if spec.worker_count < 1:
                raise HarnessFault(f"Round '{spec.label}' needs at least one worker")
            if spec.is_load and index != 0:
                raise HarnessFault(f"Load round '{spec.label}' must be the first round")
            if spec.is_load and spec.worker_count != 1:
                raise HarnessFault("The load round runs on a single worker")

    @classmethod
    def from_config(cls, config: Config, load: bool = True, label: str = "run") -> "BenchmarkPlan":
        rounds = []
        if load:
            rounds.append(RoundSpec("load", 1, DrivingMode.COMPLETION_SIGNAL))
        rounds.append(RoundSpec(label, config.workers, DrivingMode(config.driving_mode),
                                duration=config.duration, tx_count=config.tx_count))
        return cls(config, tuple(rounds))


def partition_terminals(terminal_count: int, worker_count: int) -> Tuple[Tuple[int, ...], ...]:
    """
    Split terminal ids 1..terminal_count into contiguous ranges, one per worker.

    The remainder goes to the lowest-index workers (10 over 3 gives 4, 3, 3).
    """
    if worker_count < 1:
        raise ValueError(f"worker_count must be >= 1, got {worker_count}")
    base, extra = divmod(terminal_count, worker_count)
    ranges, start = [], 1
    for worker in range(worker_count):
        size = base + (1 if worker < extra else 0)
        ranges.append(tuple(range(start, start + size)))
        start += size
    return tuple(ranges)


@dataclass(frozen=True)
class PreparedState:
    """Everything a worker needs to start a round, computed once by the manager."""

    round_label: str
    round_index: int
    plan_seed: int
    round_seed: int
    population_seed: int
    load_constants: NURandConstants
    run_constants: NURandConstants
    scale: ScaleParameters
    assignments: Tuple[Tuple[int, ...], ...]

    def to_payload(self) -> Dict:
        payload = {
            "round_label": self.round_label,
            "round_index": self.round_index,
            "plan_seed": self.plan_seed,
            "round_seed": self.round_seed,
            "population_seed": self.population_seed,
            "load_constants": list(self.load_constants.as_tuple()),
            "run_constants": list(self.run_constants.as_tuple()),
            "scale": asdict(self.scale),
            "assignments": [list(ids) for ids in self.assignments],
        }
        return payload

    @classmethod
    def from_payload(cls, payload: Dict) -> "PreparedState":
        try:
            return cls(
                round_label=payload["round_label"],
                round_index=int(payload["round_index"]),
                plan_seed=int(payload["plan_seed"]),
                round_seed=int(payload["round_seed"]),
                population_seed=int(payload["population_seed"]),
                load_constants=NURandConstants(*payload["load_constants"]),
                run_constants=NURandConstants(*payload["run_constants"]),
                scale=ScaleParameters(**payload["scale"]),
                assignments=tuple(tuple(ids) for ids in payload["assignments"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise HarnessFault(f"Malformed prepared state: {exc}") from exc

    @property
    def digest(self) -> str:
        canonical = json.dumps(self.to_payload(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @property
    def terminal_count(self) -> int:
        return sum(len(ids) for ids in self.assignments)


def _derived_seed(*entropy: int) -> int:
    return int(np.random.SeedSequence(list(entropy)).generate_state(1, dtype=np.uint32)[0])


def prepare_round(plan: BenchmarkPlan, index: int, terminals: Optional[int] = None) -> PreparedState:
    """
    Compute the shared state of round `index`.

    Population seed and NURand constants depend on the plan seed only, so every
    round of a plan sees the same loaded database; the round seed drives the
    terminals of that round.

    Args:
        plan: The benchmark plan
        index: Round index within the plan
        terminals: Terminal count override (defaults to the workload's)

    Returns:
        PreparedState: Identical for identical inputs
    """
    spec = plan.rounds[index]
    config = plan.config
    workload = config.workload
    seed = config.seed
    load_constants = NURandConstants.for_load(RandomSource([seed, 1], block=TERMINAL_RANDOM_BLOCK))
    run_constants = NURandConstants.for_run(load_constants,
                                            RandomSource([seed, 2], block=TERMINAL_RANDOM_BLOCK))
    count = 0 if spec.is_load else (workload.total_terminals if terminals is None else terminals)
    return PreparedState(
        round_label=spec.label,
        round_index=index,
        plan_seed=seed,
        round_seed=_derived_seed(seed, 3, index),
        population_seed=_derived_seed(seed, 4),
        load_constants=load_constants,
        run_constants=run_constants,
        scale=ScaleParameters.make(workload.warehouses, workload.scale_factor),
        assignments=partition_terminals(count, spec.worker_count),
    )


class RoundControl:
    """Shared end-of-round signals: transaction budget and abort."""

    def __init__(self, env: simpy.Environment, budget: Optional[int] = None):
        self.env = env
        self.budget = budget
        self.dispatched = 0
        self.exhausted = env.event()
        self.aborted = env.event()
        self.reason: Optional[str] = None
        if budget is not None and budget <= 0:
            self.exhausted.succeed()

    def admit(self) -> bool:
        """Count one dispatch against the budget; False once it is used up."""
        if self.budget is None:
            self.dispatched += 1
            return True
        if self.dispatched >= self.budget:
            return False
        self.dispatched += 1
        if self.dispatched >= self.budget and not self.exhausted.triggered:
            self.exhausted.succeed()
        return True

    def abort(self, reason: str) -> None:
        if not self.aborted.triggered:
            self.reason = reason
            logger.error("Aborting round: %s", reason)
            self.aborted.succeed(reason)


Executor = Callable[[TerminalRequest], Generator]


def ledger_executor(client: LedgerClient) -> Executor:
    """Executor submitting terminal requests to an in-process ledger."""
    def execute(request: TerminalRequest):
        proposal = ProfileRequest.from_args(request.tx_id, request.args)
        return client.execute(proposal, request.terminal_id, created=request.created)
    return execute


class Worker:
    """
    Hosts a range of terminals and their multiplexer.

    Talks to the manager only through messages: PREPARE is answered with
    READY (carrying the digest it computed), START starts the terminals, and
    after the round METRICS reports what the worker recorded.
    """

    def __init__(self, worker_id: int, env: simpy.Environment, clock: SimulationClock,
                 config: Config, execute: Executor, control: RoundControl):
        self.worker_id = worker_id
        self.env = env
        self.config = config
        self.execute = execute
        self.control = control
        self.inbox = LocalChannel()
        self.outbox = LocalChannel()
        self.multiplexer = Multiplexer(env, clock, self._dispatch, worker_id)
        self.collector = MetricsCollector()
        self.terminals: Dict[int, Terminal] = {}
        self.prepared: Optional[PreparedState] = None
        self.accepting = False
        self.in_flight = 0
        self.dropped: List[TerminalRequest] = []
        self._drained: Optional[simpy.Event] = None

    def poll(self) -> None:
        """Handle every message waiting in the inbox."""
        while True:
            message = self.inbox.receive()
            if message is None:
                return
            self.handle(message)

    def handle(self, message: Message) -> None:
        if message.type is MessageType.PREPARE:
            self.prepare(PreparedState.from_payload(message.payload))
            self.outbox.send(Message(MessageType.READY, message.round,
                                     {"worker_id": self.worker_id, "digest": self.prepared.digest}))
        elif message.type is MessageType.START:
            self.start()
        elif message.type is MessageType.FINISHED:
            self.stop()
            self.outbox.send(Message(MessageType.METRICS, message.round, {
                "worker_id": self.worker_id,
                "records": len(self.collector.records),
                "samples": len(self.multiplexer.samples),
                "dropped": len(self.dropped),
            }))
        elif message.type is MessageType.ABORT:
            self.stop()
        else:
            raise HarnessFault(f"Worker {self.worker_id} cannot handle '{message.type.value}'")

    def prepare(self, prepared: PreparedState) -> None:
        if self.worker_id >= len(prepared.assignments):
            raise HarnessFault(f"No terminal assignment for worker {self.worker_id}")
        workload = self.config.workload
        timing = TimingConstraints.for_preset(workload.timing_preset, workload.timing_scale)
        self.prepared = prepared
        self.terminals = {}
        for terminal_id in prepared.assignments[self.worker_id]:
            home_w, home_d = assign_home(terminal_id, workload.warehouses, workload.terminals_per_warehouse)
            self.terminals[terminal_id] = Terminal(
                terminal_id, home_w, home_d, workload.warehouses,
                RandomSource([prepared.round_seed, terminal_id], block=TERMINAL_RANDOM_BLOCK),
                timing,
                scale=prepared.scale,
                constants=prepared.run_constants,
                retry_cap=workload.retry_cap,
                backoff=to_ticks(workload.retry_backoff),
            )

    def start(self) -> None:
        if self.prepared is None:
            raise HarnessFault(f"Worker {self.worker_id} started before prepare")
        self.accepting = True
        now = self.env.now
        for terminal_id in sorted(self.terminals):
            self.multiplexer.push(self.terminals[terminal_id].start(now))

    def stop(self) -> None:
        if not self.accepting:
            return
        self.accepting = False
        self.dropped.extend(self.multiplexer.stop())

    def drained(self) -> simpy.Event:
        """Event that fires once no attempt of this worker is in flight."""
        event = self.env.event()
        if self.in_flight == 0:
            event.succeed()
        else:
            self._drained = event
        return event

    def _dispatch(self, request: TerminalRequest) -> None:
        if not self.accepting or not self.control.admit():
            self.dropped.append(request)
            return
        try:
            terminal = self.terminals.get(request.terminal_id)
            if terminal is None:
                raise HarnessFault(f"Worker {self.worker_id} has no terminal {request.terminal_id}")
            follow_up = terminal.advance(Dispatched(request), self.env.now)
            if follow_up is not None:
                self.multiplexer.push(follow_up)
        except TpccLedgerError as exc:
            self.control.abort(f"worker {self.worker_id}: {exc}")
            return
        self.in_flight += 1
        self.env.process(self._attempt(request))

    def _attempt(self, request: TerminalRequest):
        try:
            result: AttemptResult = yield from self.execute(request)
            terminal = self.terminals[request.terminal_id]
            conflict = result.status is TxStatus.MVCC_CONFLICT
            status = result.status
            if conflict and terminal.retry_cap > 0 and not terminal.can_retry(request):
                status = TxStatus.ABANDONED
            self.collector.add(MetricsRecord.from_attempt(
                request, result, self.worker_id, status, self.prepared.round_label))
            if self.accepting:
                follow_up = terminal.advance(Response(request, conflict), self.env.now)
                if follow_up is not None:
                    self.multiplexer.push(follow_up)
        except Exception as exc:
            logger.exception("Worker %d failed on %s", self.worker_id, request.tx_id)
            self.control.abort(f"worker {self.worker_id}: {exc}")
        finally:
            self.in_flight -= 1
            if self.in_flight == 0 and self._drained is not None and not self._drained.triggered:
                self._drained.succeed()


def _batches(stream: Iterable, size: int) -> Iterable[List]:
    iterator = iter(stream)
    while True:
        batch = list(itertools.islice(iterator, size))
        if not batch:
            return
        yield batch


class LoadWorker:
    """
    Streams the initial population through the ledger.

    Batches of `batch_size` entities become one create transaction each; at
    most `window` batches are in flight. A batch invalidated by the ledger is
    retried up to `retries` times. When every entity is committed the worker
    sends FINISHED to the manager, which ends the round.
    """

    def __init__(self, env: simpy.Environment, client: LedgerClient,
                 entities: Iterable[Tuple[EntityType, Entity]], round_label: str,
                 batch_size: int = 50, window: int = 10, retries: int = 5):
        self.env = env
        self.client = client
        self.entities = entities
        self.round_label = round_label
        self.batch_size = batch_size
        self.window = simpy.Resource(env, capacity=window)
        self.retries = retries
        self.outbox = LocalChannel()
        self.committed = 0
        self.transactions = 0
        self.retried = 0
        self.failure: Optional[str] = None
        self.completed = env.event()
        self.process = env.process(self._run())

    def _run(self):
        pending = []
        for number, batch in enumerate(_batches(self.entities, self.batch_size)):
            if self.failure is not None:
                break
            slot = self.window.request()
            yield slot
            pending.append(self.env.process(self._load_batch(number, batch, slot)))
        if pending:
            yield self.env.all_of(pending)
        payload = {"committed": self.committed, "transactions": self.transactions}
        if self.failure is not None:
            payload["reason"] = self.failure
            self.outbox.send(Message(MessageType.ABORT, self.round_label, payload))
        else:
            self.outbox.send(Message(MessageType.FINISHED, self.round_label, payload))
        logger.info("Load worker finished: %d entities in %d transactions", self.committed, self.transactions)
        self.completed.succeed(payload)

    def _already_applied(self, batch) -> bool:
        state = self.client.network.state
        return all(DESCRIPTORS[entity_type].key_of(entity).serialize() in state for entity_type, entity in batch)

    def _load_batch(self, number: int, batch, slot):
        try:
            for attempt in range(self.retries + 1):
                request = ProfileRequest.from_args(f"load-{number}-{attempt}", LoadArgs(batch))
                result = yield from self.client.execute(request, LOAD_SUBMITTER_ID)
                self.transactions += 1
                if result.status is TxStatus.COMMITTED or (
                        result.status is TxStatus.COMMIT_TIMEOUT and self._already_applied(batch)):
                    self.committed += len(batch)
                    return
                if result.status in (TxStatus.BUSINESS_ROLLBACK, TxStatus.ENDORSEMENT_ERROR):
                    reason = result.response.error or result.response.payload.get("reason")
                    self.failure = f"load batch {number} rejected at endorsement: {reason}"
                    return
                self.retried += 1
                logger.warning("Load batch %d attempt %d ended %s", number, attempt, result.status.value)
            self.failure = f"load batch {number} failed after {self.retries + 1} attempts"
        finally:
            self.window.release(slot)


@dataclass
class LoadResult:
    label: str
    entities: int
    transactions: int
    retries: int
    blocks: int
    elapsed: float
    state_hash: str


@dataclass
class RoundResult:
    label: str
    digest: str
    terminals: int
    worker_count: int
    elapsed: float
    window: float
    collector: MetricsCollector
    summary: RunSummary
    state_hash: str
    dropped: int
    blocks: List[Block] = field(default_factory=list)


@dataclass
class RunResult:
    state: WorldState
    load: Optional[LoadResult] = None
    rounds: List[RoundResult] = field(default_factory=list)


def population_stream(prepared: PreparedState) -> Iterable[Tuple[EntityType, Entity]]:
    return generate_initial_population(
        prepared.scale.warehouses, prepared.population_seed, scale=prepared.scale,
        constants=prepared.load_constants,
    )


def populate_directly(state: WorldState, prepared: PreparedState, batch_size: int = 5_000) -> WorldState:
    """
    Write the initial population straight into a store, bypassing the ledger.

    The values equal those a pipeline load commits; versions differ, so compare
    with state_hash() (values only).
    """
    for number, batch in enumerate(_batches(population_stream(prepared), batch_size)):
        access = LedgerAccess(state)
        registries = TpccRegistries(access)
        for _, entity in batch:
            registries.create(entity)
        for key, value in access.read_write_set.writes.items():
            if value is None:
                state.delete(key)
            else:
                state.put(key, value, Version(0, number))
    # Block 0 stands for the direct load; pipeline blocks follow it.
    state.height = max(state.height, 1)
    return state


class BenchmarkManager:
    """Runs the rounds of a plan against one world state."""

    def __init__(self, config: Config, clock: Optional[SimulationClock] = None):
        self.config = config
        self.clock = clock or make_clock(config.clock.value, config.speedup)

    def run(self, plan: BenchmarkPlan, state: Optional[WorldState] = None) -> RunResult:
        """
        Execute every round of the plan.

        Raises:
            HarnessFault: If a load round meets a non-empty ledger or no state exists to run on
            RoundAbortedError: If a round fails
        """
        state = state if state is not None else WorldState()
        result = RunResult(state=state)
        for index, spec in enumerate(plan.rounds):
            prepared = prepare_round(plan, index)
            if spec.is_load:
                if len(state):
                    raise HarnessFault("The load round needs an empty ledger")
                result.load = self.run_load_round(state, prepared)
            else:
                if not len(state) and plan.config.workload.warehouses > 0:
                    raise HarnessFault(f"Round '{spec.label}' has no loaded state to run on")
                result.rounds.append(self.run_execution_round(state, prepared, spec))
        return result

    def run_load_round(self, state: WorldState, prepared: PreparedState) -> LoadResult:
        """Load the initial population through the ledger pipeline."""
        config = self.config
        label = prepared.round_label
        logger.info("Round '%s' started: loading %d warehouse(s)", label, prepared.scale.warehouses)
        env = self.clock.create_environment()
        network = LedgerNetwork(env, state, config.ledger, seed=prepared.round_seed,
                                keep_blocks=config.keep_blocks)
        worker = LoadWorker(env, LedgerClient(network), population_stream(prepared), label,
                            batch_size=config.load_batch_size, window=config.load_window,
                            retries=config.load_retries)
        env.run(until=worker.completed)
        network.close()
        signal = worker.outbox.receive()
        if signal is None or signal.type is not MessageType.FINISHED:
            reason = signal.payload.get("reason", "no completion signal") if signal else "no completion signal"
            raise RoundAbortedError(label, reason)
        blocks = state.height
        logger.info("Round '%s' finished: %d entities, %d transactions, %d blocks",
                    label, worker.committed, worker.transactions, blocks)
        return LoadResult(label, worker.committed, worker.transactions, worker.retried, blocks,
                          to_seconds(env.now), state.state_hash())

    def _handshake(self, workers: List[Worker], prepared: PreparedState) -> None:
        for worker in workers:
            worker.inbox.send(Message(MessageType.PREPARE, prepared.round_label, prepared.to_payload()))
            worker.poll()
        digests = set()
        for worker in workers:
            reply = worker.outbox.receive()
            if reply is None or reply.type is not MessageType.READY:
                raise RoundAbortedError(prepared.round_label, f"worker {worker.worker_id} not ready")
            digests.add(reply.payload["digest"])
        if digests != {prepared.digest}:
            raise RoundAbortedError(prepared.round_label, "workers disagree on the prepared state")

    def _drive(self, env, spec: RoundSpec, control: RoundControl, workers: List[Worker],
               network: LedgerNetwork):
        if spec.driving_mode is DrivingMode.DURATION:
            trigger = env.timeout(to_ticks(spec.duration))
        else:
            trigger = control.exhausted
        yield trigger | control.aborted
        end = env.now
        for worker in workers:
            worker.stop()
        if not control.aborted.triggered:
            yield env.all_of([worker.drained() for worker in workers]) | control.aborted
        network.close()
        for worker in workers:
            worker.inbox.send(Message(MessageType.FINISHED, spec.label))
            worker.poll()
        return end

    def run_execution_round(self, state: WorldState, prepared: PreparedState,
                            spec: RoundSpec) -> RoundResult:
        """
        Drive the terminals of one round.

        Requests still queued when the round ends are dropped; attempts in
        flight run to a final status first.

        Raises:
            RoundAbortedError: If a worker fails
        """
        config = self.config
        if config.multiprocess and config.clock.value == "wall":
            from .remote import run_remote_round
            return run_remote_round(self, state, prepared, spec)

        label = prepared.round_label
        terminals = prepared.terminal_count
        logger.info("Round '%s' started: %d terminal(s) on %d worker(s)", label, terminals, spec.worker_count)
        if terminals == 0:
            summary = summarize([], max(spec.duration, 1e-6), label=label, terminals=0)
            return RoundResult(label, prepared.digest, 0, spec.worker_count, 0.0, spec.duration,
                               MetricsCollector(), summary, state.state_hash(), 0)

        env = self.clock.create_environment()
        network = LedgerNetwork(env, state, config.ledger, seed=prepared.round_seed,
                                keep_blocks=config.keep_blocks)
        execute = ledger_executor(LedgerClient(network))
        budget = spec.tx_count if spec.driving_mode is DrivingMode.TX_COUNT else None
        control = RoundControl(env, budget)
        workers = [Worker(worker_id, env, self.clock, config, execute, control)
                   for worker_id in range(len(prepared.assignments))]
        self._handshake(workers, prepared)
        for worker in workers:
            worker.inbox.send(Message(MessageType.START, label))
            worker.poll()

        driver = env.process(self._drive(env, spec, control, workers, network))
        env.run(until=driver)
        if control.aborted.triggered:
            raise RoundAbortedError(label, control.reason or "worker failure")

        return self._collect(state, prepared, spec, workers, network, driver.value, env.now)

    def _collect(self, state, prepared, spec, workers, network, end: int, now: int) -> RoundResult:
        label = prepared.round_label
        collector = MetricsCollector()
        dropped = 0
        for worker in workers:
            report = worker.outbox.receive()
            if report is None or report.type is not MessageType.METRICS:
                raise RoundAbortedError(label, f"worker {worker.worker_id} sent no metrics")
            collector.extend(worker.collector)
            collector.add_samples(worker.worker_id, worker.multiplexer.samples)
            dropped += report.payload["dropped"]
        window = spec.duration if spec.driving_mode is DrivingMode.DURATION else to_seconds(end)
        summary = summarize(collector, window if window > 0 else to_seconds(max(now, 1)), label=label,
                            terminals=prepared.terminal_count, samples=collector.samples)
        logger.info("Round '%s' finished: %d attempts, tpmC %.1f, %d dropped",
                    label, summary.attempts, summary.tpmc, dropped)
        return RoundResult(label, prepared.digest, prepared.terminal_count, spec.worker_count,
                           to_seconds(now), window, collector, summary, state.state_hash(), dropped,
                           list(network.blocks))
