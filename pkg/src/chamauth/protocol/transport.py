"""Transports carrying protocol frames.

The transport contract is an ordered, reliable, bidirectional byte stream
with no security assumed from it.  Frames already carry their own length
prefix; transports move whole frames.
"""

from __future__ import annotations

import socket
import struct
from collections import deque
from typing import Callable

from ..errors import TransportClosed

_LEN = struct.Struct("!I")


class InProcessEndpoint:
    """One side of an in-process duplex pair."""

    def __init__(self, outbox: deque, inbox: deque, tamper: Callable[[bytes], bytes] | None = None):
        self._outbox = outbox
        self._inbox = inbox
        self._tamper = tamper
        self.closed = False

    def send_frame(self, frame: bytes) -> None:
        if self._tamper is not None:
            frame = self._tamper(frame)
        self._outbox.append(frame)

    def poll(self) -> bytes | None:
        """Next inbound frame, or None when the peer has nothing pending."""
        if self._inbox:
            return self._inbox.popleft()
        return None

    def recv_frame(self) -> bytes:
        frame = self.poll()
        if frame is None:
            raise TransportClosed("no frame pending on in-process transport")
        return frame

    def close(self) -> None:
        self.closed = True


class InProcessPair:
    """Two connected in-process endpoints (a <-> b).

    An optional tamper hook rewrites frames in flight in a chosen
    direction, which is how the test suite models an on-path attacker.
    """

    def __init__(
        self,
        tamper_a_to_b: Callable[[bytes], bytes] | None = None,
        tamper_b_to_a: Callable[[bytes], bytes] | None = None,
    ):
        a_to_b: deque = deque()
        b_to_a: deque = deque()
        self.a = InProcessEndpoint(a_to_b, b_to_a, tamper_a_to_b)
        self.b = InProcessEndpoint(b_to_a, a_to_b, tamper_b_to_a)


class TcpTransport:
    """Frame transport over a connected TCP socket."""

    def __init__(self, sock: socket.socket):
        self._sock = sock

    def send_frame(self, frame: bytes) -> None:
        self._sock.sendall(frame)

    def _recv_exact(self, n: int) -> bytes:
        buf = b""
        while len(buf) < n:
            chunk = self._sock.recv(n - len(buf))
            if not chunk:
                raise TransportClosed("peer closed the connection")
            buf += chunk
        return buf

    def recv_frame(self) -> bytes:
        header = self._recv_exact(4)
        (length,) = _LEN.unpack(header)
        if length > 1 << 24:
            raise TransportClosed(f"implausible frame length {length}")
        return header + self._recv_exact(length)

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()
