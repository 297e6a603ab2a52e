"""Framed serial protocol between the supervisor and the brake pulser.

Wire format, byte for byte:

    SOF (0xAA) | type (1) | length (1) | payload (length) | crc (1)

crc is CRC-8 (polynomial 0x07, init 0x00, not reflected, no final xor)
over type|length|payload. Payload length is capped at 16; each defined
type has a fixed payload:

    0x10 BRAKE_CMD   seq, active, duty_percent, freq_decihertz
    0x11 HEARTBEAT   seq, time_ms as little-endian u32
    0x20 ACK         seq

The decoder is a resynchronizing stream scanner: corrupt or implausible
candidates cost one discarded byte and a recount, never an exception.
The channel model drops bytes independently, delays the survivors by a
fixed latency, and preserves their order.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Union

from .errors import ValidationError

SOF = 0xAA

TYPE_BRAKE_CMD = 0x10
TYPE_HEARTBEAT = 0x11
TYPE_ACK = 0x20

MAX_PAYLOAD = 16

# fixed payload size per frame type
_PAYLOAD_SIZE = {TYPE_BRAKE_CMD: 4, TYPE_HEARTBEAT: 5, TYPE_ACK: 1}


def _build_crc_table(poly: int = 0x07) -> tuple[int, ...]:
    table = []
    for byte in range(256):
        c = byte
        for _ in range(8):
            c = ((c << 1) ^ poly) & 0xFF if c & 0x80 else (c << 1) & 0xFF
        table.append(c)
    return tuple(table)


_CRC_TABLE = _build_crc_table()


def crc8(data: bytes) -> int:
    """CRC-8/0x07 of data, table-driven."""
    c = 0x00
    for b in data:
        c = _CRC_TABLE[c ^ b]
    return c


@dataclass(frozen=True, slots=True)
class BrakeCommand:
    seq: int
    active: bool
    duty_percent: int
    freq_decihertz: int


@dataclass(frozen=True, slots=True)
class Heartbeat:
    seq: int
    time_ms: int


@dataclass(frozen=True, slots=True)
class Ack:
    seq: int


Message = Union[BrakeCommand, Heartbeat, Ack]


def _check_range(name: str, value: int, lo: int, hi: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or not lo <= value <= hi:
        raise ValueError(f"{name} must be an integer in [{lo}, {hi}], got {value!r}")


def encode_frame(msg: Message) -> bytes:
    """Encode one message as a complete frame. Raises ValueError on
    out-of-range fields."""
    if isinstance(msg, BrakeCommand):
        _check_range("seq", msg.seq, 0, 255)
        _check_range("duty_percent", msg.duty_percent, 0, 100)
        _check_range("freq_decihertz", msg.freq_decihertz, 0, 255)
        payload = bytes((msg.seq, 1 if msg.active else 0, msg.duty_percent, msg.freq_decihertz))
        ftype = TYPE_BRAKE_CMD
    elif isinstance(msg, Heartbeat):
        _check_range("seq", msg.seq, 0, 255)
        _check_range("time_ms", msg.time_ms, 0, 2**32 - 1)
        payload = bytes((msg.seq,)) + msg.time_ms.to_bytes(4, "little")
        ftype = TYPE_HEARTBEAT
    elif isinstance(msg, Ack):
        _check_range("seq", msg.seq, 0, 255)
        payload = bytes((msg.seq,))
        ftype = TYPE_ACK
    else:
        raise ValueError(f"not a protocol message: {msg!r}")
    body = bytes((ftype, len(payload))) + payload
    return bytes((SOF,)) + body + bytes((crc8(body),))


def _parse_payload(ftype: int, payload: bytes) -> Message | None:
    """Payload bytes to a message, or None if field values are out of range."""
    if ftype == TYPE_BRAKE_CMD:
        seq, active, duty, freq = payload
        if active > 1 or duty > 100:
            return None
        return BrakeCommand(seq=seq, active=bool(active), duty_percent=duty, freq_decihertz=freq)
    if ftype == TYPE_HEARTBEAT:
        return Heartbeat(seq=payload[0], time_ms=int.from_bytes(payload[1:5], "little"))
    return Ack(seq=payload[0])


def decode_stream(accumulator: bytes, incoming: bytes) -> tuple[list[Message], bytes, int]:
    """Feed incoming bytes after any retained partial frame; return
    (messages, new accumulator, malformed frame count).

    Scans for SOF, discarding garbage silently. A candidate with an
    unknown type, a wrong length for its type, a bad CRC, or out-of-range
    payload values counts one error, costs one discarded byte, and the
    scan resumes at the next candidate SOF. A candidate that is merely
    incomplete is retained for the next call. Never raises on wire data;
    bytes consumed + bytes retained always equals bytes fed.
    """
    buf = accumulator + incoming
    n = len(buf)
    messages: list[Message] = []
    errors = 0
    pos = 0
    while True:
        sof = buf.find(SOF, pos)
        if sof < 0:
            pos = n
            break
        if sof + 3 > n:
            pos = sof  # header not complete yet
            break
        ftype = buf[sof + 1]
        length = buf[sof + 2]
        expected = _PAYLOAD_SIZE.get(ftype)
        if expected is None or length > MAX_PAYLOAD or length != expected:
            errors += 1
            pos = sof + 1
            continue
        end = sof + 4 + length
        if end > n:
            pos = sof  # wait for the rest of the frame
            break
        body = buf[sof + 1 : end - 1]
        if crc8(body) != buf[end - 1]:
            errors += 1
            pos = sof + 1
            continue
        msg = _parse_payload(ftype, buf[sof + 3 : end - 1])
        if msg is None:
            errors += 1
            pos = sof + 1
            continue
        messages.append(msg)
        pos = end
    return messages, buf[pos:], errors


class Channel:
    """Seeded lossy byte pipe with fixed latency.

    Bytes submitted with send(data, now) are each dropped independently
    with byte_drop_prob; survivors come out of step(now) once
    now >= submit time + latency, in submission order.
    """

    def __init__(self, latency: float = 0.0, byte_drop_prob: float = 0.0, seed: int = 0):
        if latency < 0:
            raise ValidationError("latency", "must be non-negative")
        if not 0.0 <= byte_drop_prob <= 1.0:
            raise ValidationError("byte_drop_prob", "must be in [0, 1]")
        self.latency = latency
        self.byte_drop_prob = byte_drop_prob
        self.seed = seed
        self._rng = random.Random(seed)
        self._queue: deque[tuple[float, int]] = deque()

    def send(self, data: bytes, now: float) -> None:
        p = self.byte_drop_prob
        rng = self._rng
        deliver_at = now + self.latency
        for b in data:
            if p > 0.0 and rng.random() < p:
                continue
            self._queue.append((deliver_at, b))

    def step(self, now: float) -> bytes:
        q = self._queue
        if not q or q[0][0] > now:
            return b""
        out = bytearray()
        while q and q[0][0] <= now:
            out.append(q.popleft()[1])
        return bytes(out)
