"""Little-endian integer and length-prefixed string primitives."""

from __future__ import annotations

import struct

from .errors import InvalidString, TruncatedInput

_U32 = struct.Struct("<I")
U32_MAX = 0xFFFFFFFF
BOM = b"\xef\xbb\xbf"


def write_u32le(value: int) -> bytes:
    if not 0 <= value <= U32_MAX:
        raise ValueError(f"u32 out of range: {value}")
    return _U32.pack(value)


def read_u32le(data: bytes, offset: int = 0) -> int:
    if len(data) - offset < 4:
        raise TruncatedInput("need 4 bytes for u32")
    return _U32.unpack_from(data, offset)[0]


def encode_utf8(s: str) -> bytes:
    raw = s.encode("utf-8")
    if raw.startswith(BOM):
        raise InvalidString("string must not start with a byte order mark")
    return raw


def write_string(s: str) -> bytes:
    raw = encode_utf8(s)
    return write_u32le(len(raw)) + raw


def read_string(data: bytes, offset: int = 0) -> str:
    reader = ByteReader(data, offset)
    return reader.string()


def string_size(s: str) -> int:
    """Encoded length of ``s``: 4-byte prefix plus UTF-8 payload."""
    return 4 + len(s.encode("utf-8"))


class ByteReader:
    """Cursor over an immutable buffer; every read is all-or-nothing."""

    def __init__(self, data: bytes, offset: int = 0) -> None:
        self._data = memoryview(data)
        if not 0 <= offset <= len(data):
            raise TruncatedInput("offset outside buffer")
        self.cursor = offset

    @property
    def remaining(self) -> int:
        return len(self._data) - self.cursor

    def take(self, n: int) -> bytes:
        if n < 0 or n > self.remaining:
            raise TruncatedInput(f"need {n} bytes, {self.remaining} left")
        start = self.cursor
        self.cursor += n
        return bytes(self._data[start : self.cursor])

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def string(self) -> str:
        length = self.u32()
        raw = self.take(length)
        if raw.startswith(BOM):
            raise InvalidString("byte order mark in string")
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InvalidString(str(exc)) from None

    def rest(self) -> bytes:
        return self.take(self.remaining)


class ByteWriter:
    def __init__(self) -> None:
        self._parts: list[bytes] = []
        self._length = 0

    def __len__(self) -> int:
        return self._length

    def raw(self, data: bytes) -> ByteWriter:
        self._parts.append(bytes(data))
        self._length += len(data)
        return self

    def u32(self, value: int) -> ByteWriter:
        return self.raw(write_u32le(value))

    def string(self, s: str) -> ByteWriter:
        return self.raw(write_string(s))

    def getvalue(self) -> bytes:
        return b"".join(self._parts)
