"""Length-prefixed field encoding shared by certificates, envelopes and messages.

A field is ``[4-byte big-endian length][payload]``.  Fixed-width values
(IVs, amounts, sequence numbers) are written bare.
"""

from __future__ import annotations

from .errors import MalformedMessage

MAX_FIELD = 1 << 30


def field(payload: bytes) -> bytes:
    return len(payload).to_bytes(4, "big") + payload


def fields(*payloads: bytes) -> bytes:
    return b"".join(field(p) for p in payloads)


def u64(value: int) -> bytes:
    return value.to_bytes(8, "big")


class Reader:
    """Strict sequential parser; every read past the end raises."""

    def __init__(self, data: bytes, error=MalformedMessage):
        self.data = bytes(data)
        self.pos = 0
        self.error = error

    def fixed(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise self.error("truncated message")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def field(self) -> bytes:
        length = int.from_bytes(self.fixed(4), "big")
        if length > MAX_FIELD:
            raise self.error("field length out of range")
        return self.fixed(length)

    def text(self) -> str:
        try:
            return self.field().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise self.error("field is not valid UTF-8") from exc

    def u64(self) -> int:
        return int.from_bytes(self.fixed(8), "big")

    def done(self) -> None:
        if self.pos != len(self.data):
            raise self.error("trailing bytes after message")
