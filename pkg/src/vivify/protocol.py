"""Wire codecs and transport for the scope frame stream and the wand event channel.

Wand/control frame format (5 bytes):

    byte 0   magic 0xA5
    byte 1   kind code
    bytes 2-3  sequence, u16 big-endian (wraps mod 2^16)
    byte 4   checksum = XOR of bytes 0-3

Scope frame payload on the wire is an 8-byte header followed by the raw
RGB8 pixel buffer:

    bytes 0-3  sequence, u32 big-endian
    bytes 4-5  width,  u16 big-endian
    bytes 6-7  height, u16 big-endian
"""

from __future__ import annotations

import socket
import struct
import time
from dataclasses import dataclass
from enum import Enum

from .errors import (
    BadChecksum,
    BadMagic,
    FrameTimeout,
    MalformedFrame,
    SourceLost,
    Truncated,
    UnknownKind,
    Unreachable,
)

MAGIC = 0xA5
WAND_FRAME_LEN = 5
FRAME_HEADER = struct.Struct(">IHH")
DEVICE_FRAME_SIZE = 320


class WandKind(Enum):
    TOUCH_DOWN = 0x01
    TOUCH_UP = 0x02


class ControlKind(Enum):
    RECORD_STARTED = 0x10
    RECORD_REJECTED = 0x11
    VIBRATE_OFF = 0x12


@dataclass(frozen=True)
class WandMessage:
    kind: WandKind
    sequence: int  # u16 counter, wraps modulo 2^16


@dataclass(frozen=True)
class ControlMessage:
    kind: ControlKind
    sequence: int  # echoes the triggering WandMessage sequence


@dataclass(frozen=True)
class ScopeFrame:
    sequence: int
    timestamp_ms: int  # milliseconds since session start
    width: int
    height: int
    pixels: bytes  # row-major RGB8

    def validate(self) -> None:
        if len(self.pixels) != self.width * self.height * 3:
            raise MalformedFrame(
                f"pixel buffer is {len(self.pixels)} bytes, expected "
                f"{self.width * self.height * 3} for {self.width}x{self.height}"
            )


def _checksum(data: bytes) -> int:
    c = 0
    for b in data:
        c ^= b
    return c


def _encode5(kind_code: int, sequence: int) -> bytes:
    body = bytes([MAGIC, kind_code]) + struct.pack(">H", sequence & 0xFFFF)
    return body + bytes([_checksum(body)])


def _decode5(data: bytes) -> tuple[int, int]:
    """Return (kind_code, sequence) from a checked 5-byte frame."""
    if len(data) < WAND_FRAME_LEN:
        raise Truncated(f"need {WAND_FRAME_LEN} bytes, got {len(data)}")
    if data[0] != MAGIC:
        raise BadMagic(f"expected 0x{MAGIC:02X}, got 0x{data[0]:02X}")
    if _checksum(data[:4]) != data[4]:
        raise BadChecksum(f"checksum 0x{data[4]:02X} does not match frame")
    (sequence,) = struct.unpack(">H", data[2:4])
    return data[1], sequence


def encode_wand_message(msg: WandMessage) -> bytes:
    return _encode5(msg.kind.value, msg.sequence)


def decode_wand_message(data: bytes) -> WandMessage:
    kind_code, sequence = _decode5(data)
    try:
        kind = WandKind(kind_code)
    except ValueError:
        raise UnknownKind(f"unknown wand kind 0x{kind_code:02X}") from None
    return WandMessage(kind=kind, sequence=sequence)


def encode_control_message(msg: ControlMessage) -> bytes:
    return _encode5(msg.kind.value, msg.sequence)


def decode_control_message(data: bytes) -> ControlMessage:
    kind_code, sequence = _decode5(data)
    try:
        kind = ControlKind(kind_code)
    except ValueError:
        raise UnknownKind(f"unknown control kind 0x{kind_code:02X}") from None
    return ControlMessage(kind=kind, sequence=sequence)


def encode_frame_payload(frame: ScopeFrame) -> bytes:
    frame.validate()
    return FRAME_HEADER.pack(frame.sequence, frame.width, frame.height) + frame.pixels


def decode_frame_payload(header: bytes, pixels: bytes, timestamp_ms: int) -> ScopeFrame:
    """Build a ScopeFrame from wire bytes. Timestamp is stamped by the receiver."""
    if len(header) != FRAME_HEADER.size:
        raise MalformedFrame(f"frame header is {len(header)} bytes")
    sequence, width, height = FRAME_HEADER.unpack(header)
    frame = ScopeFrame(
        sequence=sequence,
        timestamp_ms=timestamp_ms,
        width=width,
        height=height,
        pixels=pixels,
    )
    frame.validate()
    return frame


def parse_endpoint(endpoint: str) -> tuple[str, int]:
    host, _, port = endpoint.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"endpoint must be host:port, got {endpoint!r}")
    return host, int(port)


class FrameClient:
    """Pull-based frame source over TCP.

    Each fetch sends a one-byte request and reads back the server's most
    recent frame. Stale frames are dropped, never queued: the client keeps
    re-requesting until the sequence advances past the last delivered one,
    so delivered sequences strictly increase within a connection.

    Owned by a single consumer at a time.
    """

    REQUEST = b"\x01"

    def __init__(self, endpoint: str, timeout_ms: int = 1000):
        self.host, self.port = parse_endpoint(endpoint)
        self.timeout_ms = timeout_ms
        self._sock: socket.socket | None = None
        self._last_sequence = -1
        self._start = time.monotonic()

    def _now_ms(self) -> int:
        return int((time.monotonic() - self._start) * 1000)

    def _connect(self) -> socket.socket:
        if self._sock is None:
            try:
                self._sock = socket.create_connection(
                    (self.host, self.port), timeout=self.timeout_ms / 1000.0
                )
            except OSError as exc:
                raise Unreachable(f"{self.host}:{self.port}: {exc}") from exc
        return self._sock

    def _read_exact(self, sock: socket.socket, n: int) -> bytes:
        buf = bytearray()
        while len(buf) < n:
            chunk = sock.recv(n - len(buf))
            if not chunk:
                raise SourceLost("frame source closed the connection")
            buf.extend(chunk)
        return bytes(buf)

    def fetch(self) -> ScopeFrame:
        """Fetch the most recent frame, blocking at most timeout_ms."""
        deadline = time.monotonic() + self.timeout_ms / 1000.0
        sock = self._connect()
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise FrameTimeout(f"no fresh frame within {self.timeout_ms} ms")
            sock.settimeout(remaining)
            try:
                sock.sendall(self.REQUEST)
                header = self._read_exact(sock, FRAME_HEADER.size)
                sequence, width, height = FRAME_HEADER.unpack(header)
                if width != DEVICE_FRAME_SIZE or height != DEVICE_FRAME_SIZE:
                    raise MalformedFrame(
                        f"device frame must be {DEVICE_FRAME_SIZE}x{DEVICE_FRAME_SIZE}, "
                        f"got {width}x{height}"
                    )
                pixels = self._read_exact(sock, width * height * 3)
            except socket.timeout:
                raise FrameTimeout(f"no fresh frame within {self.timeout_ms} ms") from None
            except OSError as exc:
                raise SourceLost(str(exc)) from exc
            if sequence > self._last_sequence:
                self._last_sequence = sequence
                frame = ScopeFrame(
                    sequence=sequence,
                    timestamp_ms=self._now_ms(),
                    width=width,
                    height=height,
                    pixels=pixels,
                )
                frame.validate()
                return frame
            # Stale frame: drop it and ask again.

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            finally:
                self._sock = None


def fetch_frame(endpoint: str, timeout_ms: int = 1000) -> ScopeFrame:
    """One-shot fetch of the latest frame from a frame source address."""
    client = FrameClient(endpoint, timeout_ms=timeout_ms)
    try:
        return client.fetch()
    finally:
        client.close()
