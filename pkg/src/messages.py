"""
Manager/worker message schema.

Every message is a JSON object {"type", "round", "payload"} written as one
line. In-process workers exchange the same messages through a LocalChannel;
multi-process workers use a SocketChannel over a local TCP connection.
"""

import enum
import json
import logging
import socket
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Deque, Dict, Optional

from .exceptions import HarnessFault

logger = logging.getLogger(__name__)


class MessageType(str, enum.Enum):
    PREPARE = "prepare"
    READY = "ready"
    START = "start"
    SUBMIT = "submit"
    RESULT = "result"
    PROGRESS = "progress"
    FINISHED = "finished"
    METRICS = "metrics"
    ABORT = "abort"


@dataclass(frozen=True)
class Message:
    type: MessageType
    round: str
    payload: Dict[str, Any] = field(default_factory=dict)

    def encode(self) -> bytes:
        record = {"type": self.type.value, "round": self.round, "payload": self.payload}
        return (json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")

    @classmethod
    def decode(cls, line) -> "Message":
        """
        Parse one newline-delimited message.

        Raises:
            HarnessFault: If the line is not a well-formed message
        """
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        try:
            record = json.loads(line)
            return cls(MessageType(record["type"]), str(record["round"]), dict(record.get("payload") or {}))
        except (ValueError, KeyError, TypeError) as exc:
            raise HarnessFault(f"Malformed message {line.strip()[:80]!r}: {exc}") from exc


class LocalChannel:
    """In-process, one-directional message queue (messages pass through the codec)."""

    def __init__(self):
        self._lines: Deque[bytes] = deque()

    def send(self, message: Message) -> None:
        self._lines.append(message.encode())

    def receive(self) -> Optional[Message]:
        if not self._lines:
            return None
        return Message.decode(self._lines.popleft())

    def __len__(self) -> int:
        return len(self._lines)


class SocketChannel:
    """Bidirectional newline-delimited channel over a connected socket."""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self._reader = sock.makefile("rb")

    @classmethod
    def connect(cls, host: str, port: int, timeout: Optional[float] = None) -> "SocketChannel":
        return cls(socket.create_connection((host, port), timeout=timeout))

    def send(self, message: Message) -> None:
        self.sock.sendall(message.encode())

    def receive(self) -> Optional[Message]:
        """Next message, or None when the peer closed the connection."""
        line = self._reader.readline()
        if not line:
            return None
        return Message.decode(line)

    def expect(self, expected: MessageType) -> Message:
        message = self.receive()
        if message is None:
            raise HarnessFault(f"Connection closed while waiting for '{expected.value}'")
        if message.type is MessageType.ABORT:
            raise HarnessFault(f"Peer aborted: {message.payload.get('reason', 'unknown')}")
        if message.type is not expected:
            raise HarnessFault(f"Expected '{expected.value}', got '{message.type.value}'")
        return message

    def close(self) -> None:
        try:
            self._reader.close()
        finally:
            self.sock.close()
