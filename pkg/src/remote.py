"""
Multi-process execution rounds (wall clock only).

The manager hosts the ledger; each worker process hosts its terminals and
multiplexer and submits over a local TCP connection. Both sides speak the
newline-delimited messages of `messages`. A reader thread per connection
feeds a queue that the simpy side polls, so only the main thread of each
process touches its event environment.
"""

import logging
import multiprocessing
import queue
import socket
import threading
from dataclasses import asdict
from typing import Dict, List, Optional

from .clock import WallClock, to_seconds, to_ticks
from .config import build_config
from .contract import ProfileRequest
from .exceptions import HarnessFault, RoundAbortedError
from .inputs import ProfileType
from .ledger import AttemptResult, LedgerClient, LedgerNetwork, TxStatus
from .ledger_access import AccessStats
from .messages import Message, MessageType, SocketChannel
from .metrics import MetricsCollector, MetricsRecord
from .multiplexer import PrecisionSample
from .terminal import TerminalRequest

logger = logging.getLogger(__name__)

HOST = "127.0.0.1"
POLL_INTERVAL = 0.001
CONNECT_TIMEOUT = 30.0
JOIN_TIMEOUT = 10.0


def _reader(channel: SocketChannel, inbound: "queue.Queue", source: int) -> None:
    while True:
        try:
            message = channel.receive()
        except (OSError, HarnessFault) as exc:
            inbound.put((source, Message(MessageType.ABORT, "", {"reason": str(exc)})))
            return
        inbound.put((source, message))
        if message is None:
            return


def _drain(inbound: "queue.Queue"):
    while True:
        try:
            yield inbound.get_nowait()
        except queue.Empty:
            return


def _result_payload(result: AttemptResult, started: int) -> Dict:
    def delay(value: Optional[int]) -> Optional[int]:
        return None if value is None else value - started
    return {
        "tx_id": result.tx_id,
        "status": result.status.value,
        "endorsed": delay(result.endorsed),
        "ordered": delay(result.ordered),
        "finished": result.finished - started,
        "block_no": result.block_no,
        "tx_index": result.tx_index,
        "stats": result.stats.as_dict(),
    }


def _resolve_result(pending: Dict[str, object], payload: Dict) -> None:
    """Hand a RESULT payload to the attempt waiting on it."""
    tx_id = payload.get("tx_id")
    waiter = pending.pop(tx_id, None)
    if waiter is None:
        raise HarnessFault(f"Result for unknown or already settled transaction {tx_id!r}")
    waiter.succeed(payload)


def worker_main(port: int, worker_id: int) -> None:
    """Entry point of a worker process."""
    from .harness import PreparedState, RoundControl, Worker

    channel = SocketChannel.connect(HOST, port, timeout=CONNECT_TIMEOUT)
    channel.sock.settimeout(None)
    label = ""
    try:
        prepare = channel.expect(MessageType.PREPARE)
        label = prepare.round
        config = build_config(prepare.payload["config"])
        prepared = PreparedState.from_payload(prepare.payload["prepared"])
        clock = WallClock(config.speedup)
        env = clock.create_environment()
        control = RoundControl(env)
        pending: Dict[str, object] = {}

        def execute(request: TerminalRequest):
            proposal = ProfileRequest.from_args(request.tx_id, request.args)
            submitted = env.now
            done = env.event()
            pending[request.tx_id] = done
            channel.send(Message(MessageType.SUBMIT, label, {
                "tx_id": proposal.tx_id,
                "function": proposal.function,
                "args": list(proposal.args),
                "terminal_id": request.terminal_id,
            }))
            payload = yield done

            def shifted(key):
                return None if payload[key] is None else submitted + payload[key]
            return AttemptResult(
                tx_id=payload["tx_id"],
                status=TxStatus(payload["status"]),
                submitted=submitted,
                finished=env.now,
                endorsed=shifted("endorsed"),
                ordered=shifted("ordered"),
                block_no=payload["block_no"],
                tx_index=payload["tx_index"],
                stats=AccessStats(**payload["stats"]),
            )

        worker = Worker(worker_id, env, clock, config, execute, control)
        worker.prepare(prepared)
        channel.send(Message(MessageType.READY, label, {"worker_id": worker_id, "digest": prepared.digest}))
        channel.expect(MessageType.START)

        inbound: "queue.Queue" = queue.Queue()
        threading.Thread(target=_reader, args=(channel, inbound, worker_id), daemon=True).start()
        worker.start()
        finished = env.event()

        def pump():
            poll = to_ticks(POLL_INTERVAL)
            while True:
                for _, message in _drain(inbound):
                    if message is None or message.type is MessageType.ABORT:
                        control.abort("manager went away" if message is None else message.payload.get("reason", ""))
                    elif message.type is MessageType.RESULT:
                        _resolve_result(pending, message.payload)
                    elif message.type is MessageType.FINISHED:
                        worker.stop()
                        if not finished.triggered:
                            finished.succeed()
                if control.aborted.triggered:
                    return
                yield env.timeout(poll)

        def drive():
            yield finished | control.aborted
            if not control.aborted.triggered:
                yield worker.drained() | control.aborted

        env.process(pump())
        env.run(until=env.process(drive()))
        if control.aborted.triggered:
            channel.send(Message(MessageType.ABORT, label, {"reason": control.reason}))
            return
        channel.send(Message(MessageType.METRICS, label, {
            "worker_id": worker_id,
            "records": [asdict(record) for record in worker.collector.records],
            "samples": [[s.t1, s.t2, s.terminal_id, s.profile.value] for s in worker.multiplexer.samples],
            "dropped": len(worker.dropped),
        }))
    except Exception as exc:
        logger.exception("Worker process %d failed", worker_id)
        try:
            channel.send(Message(MessageType.ABORT, label, {"reason": f"worker {worker_id}: {exc}"}))
        except OSError:
            pass
    finally:
        channel.close()


def run_remote_round(manager, state, prepared, spec):
    """
    Run one duration-driven execution round with one process per worker.

    Raises:
        HarnessFault: For driving modes other than duration
        RoundAbortedError: If a worker process fails or disconnects
    """
    from .harness import DrivingMode, RoundControl

    label = prepared.round_label
    config = manager.config
    if spec.driving_mode is not DrivingMode.DURATION:
        raise HarnessFault("Multi-process rounds support the duration driving mode only")
    worker_count = len(prepared.assignments)
    logger.info("Round '%s' started: %d terminal(s) on %d worker process(es)",
                label, prepared.terminal_count, worker_count)

    server = socket.create_server((HOST, 0))
    server.settimeout(CONNECT_TIMEOUT)
    port = server.getsockname()[1]
    context = multiprocessing.get_context("spawn")
    processes = [context.Process(target=worker_main, args=(port, worker_id), daemon=True)
                 for worker_id in range(worker_count)]
    for process in processes:
        process.start()

    channels: Dict[int, SocketChannel] = {}
    try:
        for _ in range(worker_count):
            connection, _ = server.accept()
            connection.settimeout(None)
            channel = SocketChannel(connection)
            # Workers connect in any order; PREPARE goes out before the id is known.
            channel.send(Message(MessageType.PREPARE, label, {
                "prepared": prepared.to_payload(),
                "config": config.to_dict(),
            }))
            ready = channel.expect(MessageType.READY)
            if ready.payload.get("digest") != prepared.digest:
                raise RoundAbortedError(label, "workers disagree on the prepared state")
            channels[int(ready.payload["worker_id"])] = channel
    except (OSError, HarnessFault) as exc:
        for process in processes:
            process.terminate()
        raise RoundAbortedError(label, f"worker startup failed: {exc}") from exc
    finally:
        server.close()

    env = manager.clock.create_environment()
    network = LedgerNetwork(env, state, config.ledger, seed=prepared.round_seed, keep_blocks=config.keep_blocks)
    client = LedgerClient(network)
    control = RoundControl(env)
    inbound: "queue.Queue" = queue.Queue()
    for worker_id, channel in channels.items():
        threading.Thread(target=_reader, args=(channel, inbound, worker_id), daemon=True).start()
        channel.send(Message(MessageType.START, label))

    reports: Dict[int, Dict] = {}
    all_reported = env.event()

    def serve(channel: SocketChannel, payload: Dict):
        request = ProfileRequest(payload["tx_id"], payload["function"], tuple(payload["args"]))
        started = env.now
        result = yield from client.execute(request, int(payload["terminal_id"]))
        channel.send(Message(MessageType.RESULT, label, _result_payload(result, started)))

    def pump():
        poll = to_ticks(POLL_INTERVAL)
        while not all_reported.triggered:
            for source, message in _drain(inbound):
                if message is None:
                    if source not in reports:
                        control.abort(f"worker {source} disconnected")
                elif message.type is MessageType.SUBMIT:
                    env.process(serve(channels[source], message.payload))
                elif message.type is MessageType.METRICS:
                    reports[source] = message.payload
                    if len(reports) == worker_count:
                        all_reported.succeed()
                elif message.type is MessageType.ABORT:
                    control.abort(message.payload.get("reason", f"worker {source} aborted"))
            if control.aborted.triggered:
                return
            yield env.timeout(poll)

    def drive():
        yield env.timeout(to_ticks(spec.duration)) | control.aborted
        end = env.now
        for channel in channels.values():
            channel.send(Message(MessageType.FINISHED, label))
        yield all_reported | control.aborted
        network.close()
        return end

    env.process(pump())
    driver = env.process(drive())
    env.run(until=driver)

    for channel in channels.values():
        if control.aborted.triggered:
            try:
                channel.send(Message(MessageType.ABORT, label, {"reason": control.reason}))
            except OSError:
                pass
        channel.close()
    for process in processes:
        process.join(JOIN_TIMEOUT)
        if process.is_alive():
            process.terminate()
    if control.aborted.triggered:
        raise RoundAbortedError(label, control.reason or "worker failure")
    return _remote_result(manager, state, prepared, spec, reports, network, env.now)


def _remote_result(manager, state, prepared, spec, reports: Dict[int, Dict], network, now: int):
    from .harness import RoundResult
    from .metrics import summarize

    collector = MetricsCollector()
    dropped = 0
    for worker_id in sorted(reports):
        report = reports[worker_id]
        for record in report["records"]:
            collector.add(MetricsRecord(**record))
        samples: List[PrecisionSample] = [
            PrecisionSample(t1, t2, terminal_id, ProfileType(profile))
            for t1, t2, terminal_id, profile in report["samples"]
        ]
        collector.add_samples(worker_id, samples)
        dropped += report["dropped"]
    summary = summarize(collector, spec.duration if spec.duration > 0 else to_seconds(max(now, 1)),
                        label=prepared.round_label, terminals=prepared.terminal_count,
                        samples=collector.samples)
    logger.info("Round '%s' finished: %d attempts, tpmC %.1f", prepared.round_label,
                summary.attempts, summary.tpmc)
    return RoundResult(prepared.round_label, prepared.digest, prepared.terminal_count, spec.worker_count,
                       to_seconds(now), spec.duration, collector, summary, state.state_hash(), dropped,
                       list(network.blocks))
